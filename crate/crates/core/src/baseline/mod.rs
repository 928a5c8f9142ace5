//! Detect-then-track comparator: a matched-energy peak detector feeding
//! global-nearest-neighbour association, constant-velocity Kalman filters and
//! M-of-N track management.

mod detect;
mod kalman;

use serde::{Deserialize, Serialize};

pub use detect::{Detection, DetectorConfig, PeakDetector};
pub use kalman::{kf_step, KalmanConfig, KfTrack, ManagementConfig, TrackStatus};

use crate::assignment;
use crate::radar_sim::{RadarConfig, Snapshot};
use crate::steering::SteeringModel;
use crate::tracker::Estimate;
use crate::{Error, Result};

/// Squared Mahalanobis gate holding `probability` of a 2-D Gaussian.
pub fn chi2_gate_2d(probability: f64) -> f64 {
    -2.0 * (1.0 - probability).ln()
}

/// Global nearest-neighbour association: among assignments using only pairs
/// inside the gate, the one with the most pairs and, among those, the least
/// summed squared Mahalanobis distance. Returns the detection of every track.
pub fn gnn_associate(tracks: &[KfTrack], detections: &[Detection], gate: f64) -> Result<Vec<Option<usize>>> {
    let (m, n) = (tracks.len(), detections.len());
    let cost: Vec<f64> = tracks
        .iter()
        .flat_map(|t| detections.iter().map(move |d| t.mahalanobis(d)))
        .collect();
    // a forbidden pair costs more than any set of allowed ones
    let forbidden = gate * (m.min(n) + 1) as f64;
    let capped: Vec<f64> = cost.iter().map(|c| if *c < gate { *c } else { forbidden }).collect();
    let a = assignment::solve(&capped, m, n)?;
    Ok(a.row_to_col
        .iter()
        .enumerate()
        .map(|(i, c)| c.filter(|j| cost[i * n + j] < gate))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub detector: DetectorConfig,
    pub kalman: KalmanConfig,
    pub management: ManagementConfig,
    pub gate_probability: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            detector: DetectorConfig::default(),
            kalman: KalmanConfig::default(),
            management: ManagementConfig::default(),
            gate_probability: 0.99,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        self.detector.validate()?;
        self.kalman.validate()?;
        self.management.validate()?;
        if !(self.gate_probability > 0.0 && self.gate_probability < 1.0) {
            return Err(Error::Config(format!("gate probability {} outside (0, 1)", self.gate_probability)));
        }
        Ok(())
    }
}

/// The full detect-then-track pipeline.
#[derive(Debug, Clone)]
pub struct BaselineTracker {
    config: BaselineConfig,
    detector: PeakDetector,
    gate: f64,
    tracks: Vec<KfTrack>,
    next_id: u64,
    last_step: Option<usize>,
}

impl BaselineTracker {
    pub fn new(radar: &RadarConfig, mut config: BaselineConfig) -> Result<Self> {
        config.kalman.dt = radar.dt();
        config.validate()?;
        Ok(Self {
            detector: PeakDetector::new(radar, config.detector.clone())?,
            gate: chi2_gate_2d(config.gate_probability),
            config,
            tracks: Vec::new(),
            next_id: 0,
            last_step: None,
        })
    }

    pub fn detector(&self) -> &PeakDetector {
        &self.detector
    }

    /// Tentative and confirmed tracks.
    pub fn tracks(&self) -> &[KfTrack] {
        &self.tracks
    }

    /// Processes one snapshot and returns the confirmed tracks.
    pub fn step(&mut self, model: &SteeringModel, snapshot: &Snapshot) -> Result<Vec<Estimate>> {
        let detections = self.detector.detect(model, snapshot)?;
        self.step_detections(snapshot.step_index, &detections)
    }

    /// Track update from an externally supplied detection list.
    pub fn step_detections(&mut self, step: usize, detections: &[Detection]) -> Result<Vec<Estimate>> {
        if let Some(last) = self.last_step {
            if step != last + 1 {
                return Err(Error::Config(format!("expected step {}, got {step}", last + 1)));
            }
        }
        let cfg = self.config.kalman;
        for t in &mut self.tracks {
            t.predict(&cfg);
        }
        let assigned = gnn_associate(&self.tracks, detections, self.gate)?;
        let mut used = vec![false; detections.len()];
        for (t, a) in self.tracks.iter_mut().zip(&assigned) {
            if let Some(j) = *a {
                t.update(&detections[j])?;
                used[j] = true;
            }
            t.record(a.is_some(), step, &self.config.management);
        }
        self.tracks.retain(|t| t.status != TrackStatus::Deleted);
        for (d, _) in detections.iter().zip(&used).filter(|(_, u)| !**u) {
            self.tracks.push(KfTrack::initiate(self.next_id, step, d, &cfg));
            self.next_id += 1;
        }
        self.last_step = Some(step);
        Ok(self.estimates())
    }

    pub fn estimates(&self) -> Vec<Estimate> {
        self.tracks
            .iter()
            .filter(|t| t.status == TrackStatus::Confirmed)
            .map(|t| Estimate { track_id: t.id, state: t.mean, existence: 1.0 })
            .collect()
    }
}
