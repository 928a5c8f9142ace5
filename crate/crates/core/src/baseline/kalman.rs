use std::collections::VecDeque;

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::baseline::Detection;
use crate::steering::State;
use crate::{Error, Result};

/// Constant-velocity filter settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KalmanConfig {
    pub dt: f64,
    /// Power spectral density of the white acceleration [m^2/s^3].
    pub acceleration_psd: f64,
    /// Prior velocity standard deviation of a new track [m/s].
    pub initial_velocity_std: f64,
}

impl Default for KalmanConfig {
    fn default() -> Self {
        Self { dt: 0.1, acceleration_psd: 2.0, initial_velocity_std: 10.0 }
    }
}

impl KalmanConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dt", self.dt),
            ("acceleration_psd", self.acceleration_psd),
            ("initial_velocity_std", self.initial_velocity_std),
        ] {
            if !(v >= 0.0 && v.is_finite()) || (name == "dt" && v == 0.0) {
                return Err(Error::Config(format!("kalman {name} invalid: {v}")));
            }
        }
        Ok(())
    }

    pub fn transition(&self) -> Matrix4<f64> {
        let mut f = Matrix4::identity();
        f[(0, 2)] = self.dt;
        f[(1, 3)] = self.dt;
        f
    }

    pub fn process_covariance(&self) -> Matrix4<f64> {
        let (t, q) = (self.dt, self.acceleration_psd);
        let (a, b, c) = (q * t.powi(3) / 3.0, q * t * t / 2.0, q * t);
        Matrix4::new(
            a, 0.0, b, 0.0, //
            0.0, a, 0.0, b, //
            b, 0.0, c, 0.0, //
            0.0, b, 0.0, c,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Deleted,
}

/// M-of-N confirmation and consecutive-miss deletion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManagementConfig {
    pub confirm_hits: usize,
    pub confirm_window: usize,
    pub delete_misses: usize,
}

impl Default for ManagementConfig {
    fn default() -> Self {
        Self { confirm_hits: 3, confirm_window: 5, delete_misses: 5 }
    }
}

impl ManagementConfig {
    pub fn validate(&self) -> Result<()> {
        if self.confirm_hits == 0 || self.confirm_hits > self.confirm_window || self.delete_misses == 0 {
            return Err(Error::Config(format!("invalid track management rule {self:?}")));
        }
        Ok(())
    }
}

const H: Matrix2x4<f64> = Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0);

/// A constant-velocity track with its association history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KfTrack {
    pub id: u64,
    pub mean: State,
    pub covariance: Matrix4<f64>,
    /// Hits of the most recent steps, newest last. The initiating detection
    /// is not part of it.
    pub history: VecDeque<bool>,
    pub consecutive_misses: usize,
    pub status: TrackStatus,
    pub created_at: usize,
    pub confirmed_at: Option<usize>,
}

impl KfTrack {
    /// Tentative track at a detection with zero velocity.
    pub fn initiate(id: u64, step: usize, detection: &Detection, cfg: &KalmanConfig) -> Self {
        let mut covariance = Matrix4::zeros();
        covariance.fixed_view_mut::<2, 2>(0, 0).copy_from(&detection.covariance);
        let v = cfg.initial_velocity_std.powi(2);
        covariance[(2, 2)] = v;
        covariance[(3, 3)] = v;
        let [x, y] = detection.position;
        Self {
            id,
            mean: Vector4::new(x, y, 0.0, 0.0),
            covariance,
            history: VecDeque::new(),
            consecutive_misses: 0,
            status: TrackStatus::Tentative,
            created_at: step,
            confirmed_at: None,
        }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.mean[0], self.mean[1]]
    }

    pub fn predict(&mut self, cfg: &KalmanConfig) {
        let f = cfg.transition();
        self.mean = f * self.mean;
        let p = f * self.covariance * f.transpose() + cfg.process_covariance();
        self.covariance = (p + p.transpose()) * 0.5;
    }

    /// Innovation and its covariance for a detection.
    pub fn innovation(&self, detection: &Detection) -> (Vector2<f64>, Matrix2<f64>) {
        let z = Vector2::from(detection.position);
        let s = H * self.covariance * H.transpose() + detection.covariance;
        (z - H * self.mean, (s + s.transpose()) * 0.5)
    }

    /// Squared Mahalanobis distance of a detection from the predicted position.
    pub fn mahalanobis(&self, detection: &Detection) -> f64 {
        let (nu, s) = self.innovation(detection);
        match s.cholesky() {
            Some(c) => nu.dot(&c.solve(&nu)),
            None => f64::INFINITY,
        }
    }

    /// Position update in Joseph form.
    pub fn update(&mut self, detection: &Detection) -> Result<()> {
        let (nu, s) = self.innovation(detection);
        let s_inv = s
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular innovation covariance".into()))?;
        let k = self.covariance * H.transpose() * s_inv;
        self.mean += k * nu;
        let a = Matrix4::identity() - k * H;
        let p = a * self.covariance * a.transpose() + k * detection.covariance * k.transpose();
        self.covariance = (p + p.transpose()) * 0.5;
        Ok(())
    }

    /// Records whether the track got a detection at `step` and applies the
    /// confirmation and deletion rules.
    pub fn record(&mut self, hit: bool, step: usize, rules: &ManagementConfig) {
        self.history.push_back(hit);
        while self.history.len() > rules.confirm_window {
            self.history.pop_front();
        }
        self.consecutive_misses = if hit { 0 } else { self.consecutive_misses + 1 };
        if self.status == TrackStatus::Tentative
            && self.history.iter().filter(|h| **h).count() >= rules.confirm_hits
        {
            self.status = TrackStatus::Confirmed;
            self.confirmed_at = Some(step);
        }
        if self.consecutive_misses >= rules.delete_misses {
            self.status = TrackStatus::Deleted;
        }
    }
}

/// One filter cycle: predict, then update with the assigned detection.
pub fn kf_step(track: &mut KfTrack, detection: Option<&Detection>, cfg: &KalmanConfig) -> Result<()> {
    track.predict(cfg);
    if let Some(d) = detection {
        track.update(d)?;
    }
    Ok(())
}
