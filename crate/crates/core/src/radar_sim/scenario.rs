use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::radar_sim::RadarConfig;
use crate::steering::State;
use crate::{Error, Result};

/// One piece of a track's motion. The velocity at the start of the segment is
/// `velocity` if given, otherwise the velocity the previous segment ended with.
/// With `end_velocity` set the velocity ramps linearly over `steps`
/// transitions; without it the segment is constant velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_velocity: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSpec {
    pub birth_step: usize,
    pub death_step: usize,
    pub start: [f64; 2],
    #[serde(default = "default_mean_rcs")]
    pub mean_rcs: f64,
    pub segments: Vec<SegmentSpec>,
}

/// Scenario file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub radar: RadarConfig,
    #[serde(default = "default_first_step")]
    pub first_step: usize,
    pub num_steps: usize,
    #[serde(default)]
    pub seed: u64,
    pub tracks: Vec<TrackSpec>,
}

fn default_mean_rcs() -> f64 {
    0.05
}

fn default_first_step() -> usize {
    1
}

impl ScenarioSpec {
    /// Three-track reference scene: two tracks crossing at step 22 and a third
    /// one appearing at step 50 and vanishing after step 95.
    pub fn reference() -> Self {
        let c = 7.0 * std::f64::consts::FRAC_1_SQRT_2;
        let seg = |steps, velocity: Option<[f64; 2]>, end_velocity| SegmentSpec {
            steps,
            velocity,
            end_velocity,
        };
        Self {
            radar: RadarConfig::default(),
            first_step: 1,
            num_steps: 100,
            seed: 0,
            tracks: vec![
                TrackSpec {
                    birth_step: 1,
                    death_step: 100,
                    start: [10.0, 10.0],
                    mean_rcs: 0.05,
                    segments: vec![seg(100, Some([c, c]), None)],
                },
                TrackSpec {
                    birth_step: 1,
                    death_step: 100,
                    start: [10.0, 31.0],
                    mean_rcs: 0.05,
                    segments: vec![
                        seg(20, Some([c, -c]), None),
                        seg(80, None, Some([0.0, 7.0])),
                    ],
                },
                TrackSpec {
                    birth_step: 50,
                    death_step: 95,
                    start: [15.0, 20.0],
                    mean_rcs: 0.05,
                    segments: vec![
                        seg(16, Some([c, -c]), None),
                        seg(14, None, Some([-4.33, 2.5])),
                        seg(16, None, None),
                    ],
                },
            ],
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Ground-truth trajectory sampled at every step the object is alive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthTrack {
    pub birth_step: usize,
    pub death_step: usize,
    pub mean_rcs: f64,
    pub states: Vec<State>,
}

impl GroundTruthTrack {
    pub fn is_alive(&self, step: usize) -> bool {
        (self.birth_step..=self.death_step).contains(&step)
    }

    pub fn state_at(&self, step: usize) -> Option<State> {
        self.is_alive(step).then(|| self.states[step - self.birth_step])
    }

    pub fn alive_steps(&self) -> usize {
        self.death_step - self.birth_step + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub radar: RadarConfig,
    pub first_step: usize,
    pub num_steps: usize,
    pub seed: u64,
    pub tracks: Vec<GroundTruthTrack>,
}

impl Scenario {
    pub fn reference() -> Self {
        generate_scenario(&ScenarioSpec::reference()).expect("reference scenario is valid")
    }

    pub fn steps(&self) -> std::ops::Range<usize> {
        self.first_step..self.first_step + self.num_steps
    }

    pub fn last_step(&self) -> usize {
        self.first_step + self.num_steps - 1
    }

    /// `(track index, state)` of every object alive at `step`.
    pub fn truth_at(&self, step: usize) -> Vec<(usize, State)> {
        self.tracks
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.state_at(step).map(|s| (i, s)))
            .collect()
    }

    pub fn cardinality(&self, step: usize) -> usize {
        self.tracks.iter().filter(|t| t.is_alive(step)).count()
    }
}

/// Builds ground-truth trajectories from a scenario description.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.radar.validate()?;
    if spec.num_steps == 0 {
        return Err(Error::Scenario("num_steps must be positive".into()));
    }
    let dt = spec.radar.dt();
    let last = spec.first_step + spec.num_steps - 1;
    let mut tracks = Vec::with_capacity(spec.tracks.len());
    for (i, t) in spec.tracks.iter().enumerate() {
        let track = build_track(i, t, dt)?;
        if track.birth_step < spec.first_step || track.death_step > last {
            return Err(Error::Scenario(format!(
                "track {i} lives in [{}, {}] outside the scenario steps [{}, {last}]",
                track.birth_step, track.death_step, spec.first_step
            )));
        }
        for (n, s) in track.states.iter().enumerate() {
            let range = s[0].hypot(s[1]);
            if !(s[1] > 0.0) || range > spec.radar.max_range {
                return Err(Error::Scenario(format!(
                    "track {i} leaves the field of view at step {}: ({:.2}, {:.2})",
                    track.birth_step + n,
                    s[0],
                    s[1]
                )));
            }
        }
        tracks.push(track);
    }
    Ok(Scenario {
        radar: spec.radar.clone(),
        first_step: spec.first_step,
        num_steps: spec.num_steps,
        seed: spec.seed,
        tracks,
    })
}

fn build_track(index: usize, spec: &TrackSpec, dt: f64) -> Result<GroundTruthTrack> {
    let err = |msg: String| Error::Scenario(format!("track {index}: {msg}"));
    if spec.death_step < spec.birth_step {
        return Err(err("death_step precedes birth_step".into()));
    }
    if !(spec.mean_rcs > 0.0) {
        return Err(err("mean_rcs must be positive".into()));
    }
    if spec.segments.is_empty() {
        return Err(err("at least one segment is required".into()));
    }
    if let Some(k) = spec.segments.iter().position(|s| s.steps == 0) {
        return Err(err(format!("segment {k} has zero duration")));
    }
    let transitions = spec.death_step - spec.birth_step;
    let covered: usize = spec.segments.iter().map(|s| s.steps).sum();
    if covered < transitions {
        return Err(err(format!(
            "segments cover {covered} transitions but the track lives for {transitions}"
        )));
    }

    // velocity at every step of the segment sequence
    let mut velocities = Vec::with_capacity(covered + 1);
    let mut v = spec.segments[0]
        .velocity
        .ok_or_else(|| err("first segment needs a velocity".into()))?;
    velocities.push(v);
    for seg in &spec.segments {
        let start = seg.velocity.unwrap_or(v);
        let end = seg.end_velocity.unwrap_or(start);
        *velocities.last_mut().unwrap() = start;
        for j in 1..=seg.steps {
            let f = j as f64 / seg.steps as f64;
            velocities.push([start[0] + f * (end[0] - start[0]), start[1] + f * (end[1] - start[1])]);
        }
        v = end;
    }

    let mut p = spec.start;
    let mut states = Vec::with_capacity(transitions + 1);
    for n in 0..=transitions {
        let vel = velocities[n];
        states.push(State::new(p[0], p[1], vel[0], vel[1]));
        if n < transitions {
            let next = velocities[n + 1];
            p[0] += dt * 0.5 * (vel[0] + next[0]);
            p[1] += dt * 0.5 * (vel[1] + next[1]);
        }
    }
    Ok(GroundTruthTrack {
        birth_step: spec.birth_step,
        death_step: spec.death_step,
        mean_rcs: spec.mean_rcs,
        states,
    })
}
