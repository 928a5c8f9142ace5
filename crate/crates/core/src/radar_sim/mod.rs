//! Scenario generation and raw-signal synthesis for a TDM MIMO radar.

mod config;
mod scenario;
mod simulate;
mod waveform;

pub use config::{RadarConfig, NOISE_TEMPERATURE};
pub use scenario::{
    generate_scenario, GroundTruthTrack, Scenario, ScenarioSpec, SegmentSpec, TrackSpec,
};
pub use simulate::{sample_rcs, stream_rng, ObjectReturn, Simulator, Snapshot};
pub use waveform::{generate_waveform, instantaneous_frequency, pulse_energy};
