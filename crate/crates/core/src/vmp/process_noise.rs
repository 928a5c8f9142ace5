use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::vmp::{GaussianBelief, MotionModel};
use crate::{Error, Result};

/// Gamma hyper-prior `Ga(zeta / 2, chi / 2)` on every process-noise precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessNoisePrior {
    pub zeta: f64,
    pub chi: f64,
}

impl Default for ProcessNoisePrior {
    fn default() -> Self {
        Self { zeta: 2.0, chi: 2.0 }
    }
}

impl ProcessNoisePrior {
    pub fn validate(&self) -> Result<()> {
        if !(self.zeta > 0.0 && self.chi > 0.0) {
            return Err(Error::Config("process-noise prior needs zeta, chi > 0".into()));
        }
        Ok(())
    }

    pub fn belief(&self) -> ProcessNoiseBelief {
        ProcessNoiseBelief { shape: [self.zeta / 2.0; 4], rate: [self.chi / 2.0; 4] }
    }
}

/// Independent gamma beliefs (shape, rate) over the four acceleration precisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessNoiseBelief {
    pub shape: [f64; 4],
    pub rate: [f64; 4],
}

impl ProcessNoiseBelief {
    pub fn mean_precision(&self) -> [f64; 4] {
        std::array::from_fn(|j| self.shape[j] / self.rate[j])
    }
}

/// Expected scaled transition residual
/// `E[G^-1 (Phi_{n+1} - T Phi_n)(...)^T G^-T]` under independent beliefs.
pub fn transition_moment(
    prev: &GaussianBelief,
    next: &GaussianBelief,
    motion: &MotionModel,
) -> Matrix4<f64> {
    let t = &motion.transition;
    let gi = motion.gain_inverse();
    let d = next.mean - t * prev.mean;
    let inner = d * d.transpose() + next.covariance + t * prev.covariance * t.transpose();
    gi * inner * gi.transpose()
}

/// Gamma posterior from a run of consecutive state beliefs: shape
/// `(N + zeta) / 2`, rate `(chi + sum_n V_jj) / 2` over the `N` transitions.
pub fn update_process_noise(
    beliefs: &[GaussianBelief],
    motion: &MotionModel,
    prior: &ProcessNoisePrior,
) -> ProcessNoiseBelief {
    let transitions = beliefs.len().saturating_sub(1);
    let mut sum = [0.0; 4];
    for w in beliefs.windows(2) {
        let v = transition_moment(&w[0], &w[1], motion);
        for (j, s) in sum.iter_mut().enumerate() {
            *s += v[(j, j)];
        }
    }
    ProcessNoiseBelief {
        shape: [(transitions as f64 + prior.zeta) / 2.0; 4],
        rate: std::array::from_fn(|j| (prior.chi + sum[j]) / 2.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector4;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn pair() -> (GaussianBelief, GaussianBelief) {
        let prev = GaussianBelief::new(
            Vector4::new(10.0, 10.0, 5.0, 5.0),
            Matrix4::from_diagonal(&Vector4::new(0.02, 0.03, 0.5, 0.4)),
        )
        .unwrap();
        let mut cov = Matrix4::from_diagonal(&Vector4::new(0.025, 0.02, 0.45, 0.6));
        cov[(0, 2)] = 0.05;
        cov[(2, 0)] = 0.05;
        let next = GaussianBelief::new(Vector4::new(10.52, 10.47, 5.3, 4.6), cov).unwrap();
        (prev, next)
    }

    #[test]
    fn no_transitions_returns_prior() {
        let m = MotionModel::constant_velocity(0.1).unwrap();
        let prior = ProcessNoisePrior::default();
        assert_eq!(update_process_noise(&[], &m, &prior), prior.belief());
        assert_eq!(update_process_noise(&[pair().0], &m, &prior), prior.belief());
    }

    #[test]
    fn shape_counts_transitions() {
        let m = MotionModel::constant_velocity(0.1).unwrap();
        let (a, _) = pair();
        let beliefs = vec![a; 101];
        let post = update_process_noise(&beliefs, &m, &ProcessNoisePrior::default());
        assert_eq!(post.shape, [51.0; 4]);
    }

    #[test]
    fn moment_matches_sampling() {
        let m = MotionModel::constant_velocity(0.1).unwrap();
        let (prev, next) = pair();
        let v = transition_moment(&prev, &next, &m);
        let (lp, ln) = (prev.covariance.cholesky().unwrap().l(), next.covariance.cholesky().unwrap().l());
        let gi = m.gain_inverse();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 100_000;
        let mut acc = [0.0; 4];
        for _ in 0..n {
            let zp = Vector4::from_fn(|_, _| StandardNormal.sample(&mut rng));
            let zn = Vector4::from_fn(|_, _| StandardNormal.sample(&mut rng));
            let r = gi * ((next.mean + ln * zn) - m.transition * (prev.mean + lp * zp));
            for j in 0..4 {
                acc[j] += r[j] * r[j];
            }
        }
        for j in 0..4 {
            let mc = acc[j] / n as f64;
            assert!((mc / v[(j, j)] - 1.0).abs() < 0.02, "dim {j}: {mc} vs {}", v[(j, j)]);
        }
    }

    #[test]
    fn smoother_runs_give_larger_precision() {
        let m = MotionModel::constant_velocity(0.1).unwrap();
        let (a, b) = pair();
        let prior = ProcessNoisePrior::default();
        let rough = update_process_noise(&[a, b], &m, &prior);
        let mut smooth_next = b;
        smooth_next.mean = m.transition * a.mean;
        let smooth = update_process_noise(&[a, smooth_next], &m, &prior);
        for j in 0..4 {
            assert!(smooth.mean_precision()[j] >= rough.mean_precision()[j]);
        }
    }
}
