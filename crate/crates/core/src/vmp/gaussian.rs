use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::vmp::ProcessNoiseBelief;
use crate::{Error, Result};

/// Gaussian state belief `q(Phi) = N(mean, covariance)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBelief {
    pub mean: Vector4<f64>,
    pub covariance: Matrix4<f64>,
}

impl GaussianBelief {
    pub fn new(mean: Vector4<f64>, covariance: Matrix4<f64>) -> Result<Self> {
        let b = Self { mean, covariance };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical("non-finite belief mean".into()));
        }
        let c = &self.covariance;
        if (c - c.transpose()).abs().max() > 1e-9 * c.abs().max().max(1e-300) {
            return Err(Error::Numerical("belief covariance not symmetric".into()));
        }
        if c.cholesky().is_none() {
            return Err(Error::Numerical("belief covariance not positive definite".into()));
        }
        Ok(())
    }

    pub fn position(&self) -> [f64; 2] {
        [self.mean[0], self.mean[1]]
    }

    pub fn to_message(&self) -> Result<GaussianMessage> {
        GaussianMessage::from_covariance(self.mean, self.covariance)
    }
}

/// Gaussian message in information form. Data messages carry no velocity
/// information, so their precision is singular; the covariance form would be
/// infinite there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMessage {
    pub mean: Vector4<f64>,
    pub precision: Matrix4<f64>,
}

impl GaussianMessage {
    pub fn from_covariance(mean: Vector4<f64>, covariance: Matrix4<f64>) -> Result<Self> {
        let precision = covariance
            .cholesky()
            .ok_or_else(|| Error::Numerical("message covariance not positive definite".into()))?
            .inverse();
        Ok(Self { mean, precision: symmetrize(&precision) })
    }

    /// Message that carries no information.
    pub fn uninformative(mean: Vector4<f64>) -> Self {
        Self { mean, precision: Matrix4::zeros() }
    }

    /// Position-only message with diagonal covariance `variance`.
    pub fn position(mean: [f64; 2], variance: [f64; 2]) -> Self {
        let mut precision = Matrix4::zeros();
        precision[(0, 0)] = 1.0 / variance[0];
        precision[(1, 1)] = 1.0 / variance[1];
        Self { mean: Vector4::new(mean[0], mean[1], 0.0, 0.0), precision }
    }

    pub fn is_informative(&self) -> bool {
        self.precision.iter().any(|v| *v != 0.0)
    }

    /// Covariance, when the precision is invertible.
    pub fn covariance(&self) -> Option<Matrix4<f64>> {
        self.precision.cholesky().map(|c| symmetrize(&c.inverse()))
    }
}

/// Linear kinematics `Phi_n = T Phi_{n-1} + G a` with `a ~ N(0, Lambda_a^{-1})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionModel {
    pub transition: Matrix4<f64>,
    pub noise_gain: Matrix4<f64>,
    pub dt: f64,
}

impl MotionModel {
    /// Constant-velocity model with `G = diag(dt^2/2, dt^2/2, dt, dt)`.
    pub fn constant_velocity(dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        let mut transition = Matrix4::identity();
        transition[(0, 2)] = dt;
        transition[(1, 3)] = dt;
        let h = dt * dt / 2.0;
        let noise_gain = Matrix4::from_diagonal(&Vector4::new(h, h, dt, dt));
        Ok(Self { transition, noise_gain, dt })
    }

    pub fn validate(&self) -> Result<()> {
        for (name, m) in [("transition", &self.transition), ("noise gain", &self.noise_gain)] {
            if m.determinant().abs() < 1e-300 || m.try_inverse().is_none() {
                return Err(Error::Config(format!("{name} matrix is singular")));
            }
        }
        Ok(())
    }

    pub fn transition_inverse(&self) -> Matrix4<f64> {
        self.transition.try_inverse().expect("validated transition")
    }

    pub fn gain_inverse(&self) -> Matrix4<f64> {
        self.noise_gain.try_inverse().expect("validated noise gain")
    }

    /// `G diag(1 / E[lambda_j]) G^T`.
    pub fn process_covariance(&self, noise: &ProcessNoiseBelief) -> Matrix4<f64> {
        let var = Vector4::from_iterator(noise.mean_precision().iter().map(|l| 1.0 / l));
        self.noise_gain * Matrix4::from_diagonal(&var) * self.noise_gain.transpose()
    }

    pub fn predict(&self, belief: &GaussianBelief, noise: &ProcessNoiseBelief) -> GaussianBelief {
        let t = &self.transition;
        GaussianBelief {
            mean: t * belief.mean,
            covariance: symmetrize(&(t * belief.covariance * t.transpose() + self.process_covariance(noise))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// From step `n - 1` to `n`.
    Forward,
    /// From step `n + 1` to `n`.
    Backward,
}

/// Message a neighbouring state belief sends along the kinematic chain. The
/// neighbour's own covariance is propagated together with the process noise.
pub fn kinematic_message(
    neighbor: &GaussianBelief,
    direction: Direction,
    motion: &MotionModel,
    noise: &ProcessNoiseBelief,
) -> Result<GaussianMessage> {
    motion.validate()?;
    let q = motion.process_covariance(noise);
    let (mean, cov) = match direction {
        Direction::Forward => {
            let t = &motion.transition;
            (t * neighbor.mean, t * neighbor.covariance * t.transpose() + q)
        }
        Direction::Backward => {
            let ti = motion.transition_inverse();
            (ti * neighbor.mean, ti * (neighbor.covariance + q) * ti.transpose())
        }
    };
    GaussianMessage::from_covariance(mean, symmetrize(&cov))
}

/// Product of Gaussian messages: precisions add, means are precision-weighted.
pub fn fuse_gaussian_messages(messages: &[GaussianMessage]) -> Result<GaussianBelief> {
    if messages.is_empty() {
        return Err(Error::Empty("no messages to fuse"));
    }
    let mut precision = Matrix4::zeros();
    let mut info = Vector4::zeros();
    for m in messages {
        precision += m.precision;
        info += m.precision * m.mean;
    }
    let chol = symmetrize(&precision)
        .cholesky()
        .ok_or_else(|| Error::Numerical("fused precision not positive definite".into()))?;
    let mean = chol.solve(&info);
    let covariance = symmetrize(&chol.inverse());
    GaussianBelief::new(mean, covariance)
}

pub(crate) fn symmetrize(m: &Matrix4<f64>) -> Matrix4<f64> {
    (m + m.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vmp::ProcessNoisePrior;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn sample(rng: &mut ChaCha8Rng, mean: &Vector4<f64>, cov: &Matrix4<f64>) -> Vector4<f64> {
        let l = cov.cholesky().unwrap().l();
        let z = Vector4::from_fn(|_, _| StandardNormal.sample(rng));
        mean + l * z
    }

    fn belief() -> GaussianBelief {
        let a = Matrix4::new(
            0.3, 0.05, 0.02, 0.0, //
            0.05, 0.4, 0.0, 0.01, //
            0.02, 0.0, 1.5, 0.2, //
            0.0, 0.01, 0.2, 2.0,
        );
        GaussianBelief::new(Vector4::new(12.0, 30.0, 4.0, -3.0), a).unwrap()
    }

    fn noise() -> ProcessNoiseBelief {
        ProcessNoiseBelief { shape: [3.0, 2.0, 5.0, 4.0], rate: [1.5, 4.0, 2.0, 1.0] }
    }

    #[test]
    fn forward_then_backward_recovers_mean() {
        let m = MotionModel::constant_velocity(0.1).unwrap();
        let b = belief();
        let f = kinematic_message(&b, Direction::Forward, &m, &noise()).unwrap();
        let fb = GaussianBelief { mean: f.mean, covariance: f.covariance().unwrap() };
        let back = kinematic_message(&fb, Direction::Backward, &m, &noise()).unwrap();
        assert!((back.mean - b.mean).norm() < 1e-12);
    }

    #[test]
    fn exact_neighbour_with_vanishing_noise() {
        let m = MotionModel::constant_velocity(0.1).unwrap();
        let b = belief();
        let quiet = ProcessNoiseBelief { shape: [1.0; 4], rate: [1e-12; 4] };
        let f = kinematic_message(&b, Direction::Forward, &m, &quiet).unwrap();
        let t = m.transition;
        assert!((f.mean - t * b.mean).norm() < 1e-12);
        let expected = t * b.covariance * t.transpose();
        assert!((f.covariance().unwrap() - expected).norm() < 1e-8);
    }

    #[test]
    fn forward_covariance_matches_sampling() {
        let m = MotionModel::constant_velocity(0.1).unwrap();
        let b = belief();
        let nz = noise();
        let f = kinematic_message(&b, Direction::Forward, &m, &nz).unwrap();
        let cov = f.covariance().unwrap();
        let q_sd: Vec<f64> = nz.mean_precision().iter().map(|l| (1.0 / l).sqrt()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 100_000;
        let mut acc = Matrix4::zeros();
        let mut mean = Vector4::zeros();
        let draws: Vec<Vector4<f64>> = (0..n)
            .map(|_| {
                let phi = sample(&mut rng, &b.mean, &b.covariance);
                let a = Vector4::from_fn(|i, _| { let z: f64 = StandardNormal.sample(&mut rng); q_sd[i] * z });
                m.transition * phi + m.noise_gain * a
            })
            .collect();
        for d in &draws {
            mean += d;
        }
        mean /= n as f64;
        for d in &draws {
            acc += (d - mean) * (d - mean).transpose();
        }
        acc /= (n - 1) as f64;
        for i in 0..4 {
            for j in 0..4 {
                let scale = (cov[(i, i)] * cov[(j, j)]).sqrt();
                assert!(
                    (acc[(i, j)] - cov[(i, j)]).abs() < 0.02 * scale,
                    "({i},{j}): sampled {} vs {}",
                    acc[(i, j)],
                    cov[(i, j)]
                );
            }
        }
    }

    #[test]
    fn fusing_identical_halves_covariance() {
        let b = belief();
        let msg = b.to_message().unwrap();
        let fused = fuse_gaussian_messages(&[msg, msg]).unwrap();
        assert!((fused.mean - b.mean).norm() < 1e-10);
        assert!((fused.covariance - b.covariance / 2.0).norm() < 1e-10);
    }

    #[test]
    fn vague_message_is_neutral() {
        let b = belief();
        let vague = GaussianMessage::uninformative(Vector4::new(-50.0, 3.0, 9.0, 9.0));
        let fused = fuse_gaussian_messages(&[b.to_message().unwrap(), vague]).unwrap();
        assert!((fused.mean - b.mean).norm() < 1e-10);
        assert!((fused.covariance - b.covariance).norm() < 1e-10);
        assert!(fuse_gaussian_messages(&[]).is_err());
        assert!(fuse_gaussian_messages(&[vague]).is_err());
    }

    #[test]
    fn fusion_matches_grid_density() {
        // diagonal messages factorize, so every axis is a 1-D product
        let msgs = [
            GaussianMessage {
                mean: Vector4::new(1.0, -2.0, 0.5, 3.0),
                precision: Matrix4::from_diagonal(&Vector4::new(2.0, 0.5, 1.0, 4.0)),
            },
            GaussianMessage {
                mean: Vector4::new(2.5, 0.0, -1.0, 2.0),
                precision: Matrix4::from_diagonal(&Vector4::new(1.0, 3.0, 0.25, 1.0)),
            },
            GaussianMessage::position([0.0, 1.0], [4.0, 2.0]),
        ];
        let fused = fuse_gaussian_messages(&msgs).unwrap();
        for axis in 0..4 {
            let (lo, hi, n) = (-15.0, 15.0, 30_001);
            let h = (hi - lo) / (n - 1) as f64;
            let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
            for i in 0..n {
                let x = lo + i as f64 * h;
                let logp: f64 = msgs
                    .iter()
                    .map(|m| -0.5 * m.precision[(axis, axis)] * (x - m.mean[axis]).powi(2))
                    .sum();
                let p = logp.exp();
                z += p;
                m1 += p * x;
                m2 += p * x * x;
            }
            let mean = m1 / z;
            let var = m2 / z - mean * mean;
            assert!((mean - fused.mean[axis]).abs() < 1e-6);
            assert!((var - fused.covariance[(axis, axis)]).abs() < 1e-6);
        }
    }

    #[test]
    fn predict_uses_prior_noise() {
        let m = MotionModel::constant_velocity(0.1).unwrap();
        let prior = ProcessNoisePrior::default().belief();
        let p = m.predict(&belief(), &prior);
        assert!((p.mean - Vector4::new(12.4, 29.7, 4.0, -3.0)).norm() < 1e-12);
        let singular = MotionModel { noise_gain: Matrix4::zeros(), ..m };
        assert!(matches!(singular.validate(), Err(Error::Config(_))));
    }
}
