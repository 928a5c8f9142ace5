use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::steering::State;
use crate::vmp::{GaussianBelief, GaussianMessage, ProcessNoiseBelief};
use crate::{Error, Result, C64};

/// Marginal of one reflectivity: mean as `[re, im]` and variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectivityMarginal {
    pub mean: [f64; 2],
    pub variance: f64,
}

impl ReflectivityMarginal {
    pub fn new(mean: C64, variance: f64) -> Self {
        Self { mean: [mean.re, mean.im], variance }
    }

    pub fn mean(&self) -> C64 {
        C64::new(self.mean[0], self.mean[1])
    }
}

/// Everything the tracker remembers about one potential object. All per-step
/// vectors start at `birth_step` and have one entry per step since then.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackState {
    pub id: u64,
    pub birth_step: usize,
    pub beliefs: Vec<GaussianBelief>,
    pub existence: Vec<f64>,
    pub reflectivity: Vec<ReflectivityMarginal>,
    /// Data messages, written once at their step.
    pub data_messages: Vec<GaussianMessage>,
    pub birth_prior: GaussianMessage,
    pub process_noise: ProcessNoiseBelief,
    /// Step at which the track was pruned; it stays dead afterwards.
    pub pruned_at: Option<usize>,
}

impl TrackState {
    pub fn len(&self) -> usize {
        self.beliefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beliefs.is_empty()
    }

    pub fn last_step(&self) -> usize {
        self.birth_step + self.len() - 1
    }

    pub fn is_alive(&self) -> bool {
        self.pruned_at.is_none()
    }

    fn index(&self, step: usize) -> Option<usize> {
        (step >= self.birth_step && step <= self.last_step()).then(|| step - self.birth_step)
    }

    pub fn belief_at(&self, step: usize) -> Option<&GaussianBelief> {
        self.index(step).map(|i| &self.beliefs[i])
    }

    /// Existence mean at `step`; 0 outside the track's life.
    pub fn existence_at(&self, step: usize) -> f64 {
        self.index(step).map_or(0.0, |i| self.existence[i])
    }

    pub fn current(&self) -> &GaussianBelief {
        self.beliefs.last().expect("tracks are never empty")
    }

    pub fn current_existence(&self) -> f64 {
        *self.existence.last().expect("tracks are never empty")
    }

    /// Checks the memory discipline: equal-length histories, valid beliefs,
    /// existence in `[0, 1]` and zero after pruning.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if n == 0 {
            return Err(Error::Numerical(format!("track {} has no history", self.id)));
        }
        for len in [self.existence.len(), self.reflectivity.len(), self.data_messages.len()] {
            if len != n {
                return Err(Error::Dimension { expected: n, got: len });
            }
        }
        for b in &self.beliefs {
            b.validate()?;
        }
        if self.existence.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::Numerical(format!("track {} existence outside [0, 1]", self.id)));
        }
        if let Some(p) = self.pruned_at {
            if p != self.last_step() || self.current_existence() != 0.0 {
                return Err(Error::Numerical(format!("track {} pruned inconsistently", self.id)));
            }
        }
        Ok(())
    }
}

/// Reported object at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub track_id: u64,
    pub state: State,
    pub existence: f64,
}

impl Estimate {
    pub fn position(&self) -> [f64; 2] {
        [self.state[0], self.state[1]]
    }
}

/// Objects whose existence mean at `step` exceeds `threshold`.
pub fn extract_estimates(tracks: &[TrackState], step: usize, threshold: f64) -> Vec<Estimate> {
    tracks
        .iter()
        .filter_map(|t| {
            let xi = t.existence_at(step);
            (xi > threshold).then(|| Estimate {
                track_id: t.id,
                state: t.belief_at(step).expect("existence implies a belief").mean,
                existence: xi,
            })
        })
        .collect()
}

/// JSON dump of every track history of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub seed: Option<u64>,
    pub last_step: Option<usize>,
    pub tracks: Vec<TrackState>,
}

impl Checkpoint {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let c: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        for t in &c.tracks {
            t.validate()?;
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix4, Vector4};

    fn track(existence: Vec<f64>) -> TrackState {
        let b = GaussianBelief::new(Vector4::new(1.0, 20.0, 0.5, 0.0), Matrix4::identity()).unwrap();
        let n = existence.len();
        TrackState {
            id: 7,
            birth_step: 3,
            beliefs: vec![b; n],
            existence,
            reflectivity: vec![ReflectivityMarginal::new(C64::new(1.0, -2.0), 0.1); n],
            data_messages: vec![GaussianMessage::uninformative(b.mean); n],
            birth_prior: b.to_message().unwrap(),
            process_noise: crate::vmp::ProcessNoisePrior::default().belief(),
            pruned_at: None,
        }
    }

    #[test]
    fn no_tracks_above_threshold_gives_empty_set() {
        let t = track(vec![0.0, 0.0]);
        assert!(extract_estimates(&[t], 4, 0.5).is_empty());
    }

    #[test]
    fn reported_set_shrinks_with_threshold() {
        let tracks: Vec<TrackState> =
            [0.2, 0.55, 0.9, 0.999].iter().map(|x| track(vec![0.9, *x])).collect();
        let mut last = usize::MAX;
        for i in 0..=100 {
            let n = extract_estimates(&tracks, 4, i as f64 / 100.0).len();
            assert!(n <= last);
            last = n;
        }
        assert_eq!(extract_estimates(&tracks, 4, 0.5).len(), 3);
        assert!(extract_estimates(&tracks, 99, 0.0).is_empty());
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        let mut t = track(vec![1.0, 0.0]);
        t.pruned_at = Some(4);
        let c = Checkpoint { seed: Some(3), last_step: Some(4), tracks: vec![t] };
        c.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap(), c);
    }

    #[test]
    fn inconsistent_prune_rejected() {
        let mut t = track(vec![1.0, 0.7]);
        t.pruned_at = Some(4);
        assert!(t.validate().is_err());
    }
}
