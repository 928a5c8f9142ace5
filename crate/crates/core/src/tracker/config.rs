use serde::{Deserialize, Serialize};

use crate::radar_sim::RadarConfig;
use crate::vmp::{ExistencePrior, ProcessNoisePrior, ProjectionOptions};
use crate::{Error, Result};

/// Spacing of the birth grid in range and in sine of bearing. `None` picks
/// half the range resolution and half the virtual-array beamwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BirthGridSpec {
    pub range_spacing: Option<f64>,
    pub sin_spacing: Option<f64>,
    /// Largest `|sin(bearing)|` searched.
    pub max_sin: f64,
}

impl Default for BirthGridSpec {
    fn default() -> Self {
        Self { range_spacing: None, sin_spacing: None, max_sin: 0.95 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    pub p_survive: f64,
    pub p_birth: f64,
    /// Existence mean a grid candidate needs to become a track.
    pub birth_threshold: f64,
    pub prune_threshold: f64,
    pub report_threshold: f64,
    pub inner_iterations: usize,
    /// Early exit of the inner sweeps once no mean moves by more than this [m, m/s].
    pub sweep_tolerance: f64,
    /// `None` derives the precision from `mean_rcs` and the radar equation at
    /// half the maximum range.
    pub prior_reflectivity_precision: Option<f64>,
    pub mean_rcs: f64,
    pub birth_grid: BirthGridSpec,
    pub birth_velocity_std: f64,
    pub max_births_per_step: usize,
    /// Number of most recent steps revisited by the inner sweeps; `None`
    /// revisits the whole history.
    pub smoothing_window: Option<usize>,
    pub process_noise: ProcessNoisePrior,
    pub projection_max_iterations: usize,
    pub projection_tolerance: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        let p_birth = 1e-8;
        Self {
            p_survive: 0.95,
            p_birth,
            birth_threshold: 1.0 - p_birth,
            prune_threshold: 0.1,
            report_threshold: 0.5,
            inner_iterations: 100,
            sweep_tolerance: 1e-10,
            prior_reflectivity_precision: None,
            mean_rcs: 0.05,
            birth_grid: BirthGridSpec::default(),
            birth_velocity_std: 10.0,
            max_births_per_step: 8,
            smoothing_window: None,
            process_noise: ProcessNoisePrior::default(),
            projection_max_iterations: 50,
            projection_tolerance: 1e-6,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        self.existence_prior().validate()?;
        self.process_noise.validate()?;
        let (lo, hi, rep) = (self.prune_threshold, self.birth_threshold, self.report_threshold);
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return Err(Error::Config(format!(
                "thresholds must satisfy 0 < prune ({lo}) < birth ({hi}) < 1"
            )));
        }
        if !(0.0 < rep && rep < 1.0) {
            return Err(Error::Config(format!("report threshold {rep} outside (0, 1)")));
        }
        if self.inner_iterations == 0 {
            return Err(Error::Config("inner_iterations must be at least 1".into()));
        }
        if self.smoothing_window == Some(0) {
            return Err(Error::Config("smoothing_window must be at least 1".into()));
        }
        if let Some(l) = self.prior_reflectivity_precision {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Config(format!("reflectivity prior precision {l} not positive")));
            }
        }
        let positive = [
            ("mean_rcs", self.mean_rcs),
            ("birth_velocity_std", self.birth_velocity_std),
            ("projection_tolerance", self.projection_tolerance),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let g = &self.birth_grid;
        for s in [g.range_spacing, g.sin_spacing].into_iter().flatten() {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("birth grid spacing {s} not positive")));
            }
        }
        if !(g.max_sin > 0.0 && g.max_sin < 1.0) {
            return Err(Error::Config(format!("birth grid max_sin {} outside (0, 1)", g.max_sin)));
        }
        Ok(())
    }

    pub fn existence_prior(&self) -> ExistencePrior {
        ExistencePrior { p_survive: self.p_survive, p_birth: self.p_birth }
    }

    pub fn projection_options(&self) -> ProjectionOptions {
        ProjectionOptions {
            max_iterations: self.projection_max_iterations,
            tolerance: self.projection_tolerance,
            ..ProjectionOptions::default()
        }
    }

    /// `lambda_{alpha,p}`: the inverse of the expected `|alpha|^2` of an
    /// object of mean RCS at half the maximum range, unless set explicitly.
    pub fn reflectivity_precision(&self, radar: &RadarConfig) -> f64 {
        self.prior_reflectivity_precision.unwrap_or_else(|| {
            let a = radar.amplitude_scale(radar.max_range / 2.0);
            1.0 / (self.mean_rcs * a * a)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = TrackerConfig::default();
        c.validate().unwrap();
        assert_eq!(c.birth_threshold, 1.0 - 1e-8);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<TrackerConfig>(&text).unwrap(), c);
    }

    #[test]
    fn inverted_thresholds_rejected() {
        let c = TrackerConfig { prune_threshold: 0.99, birth_threshold: 0.5, ..Default::default() };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = TrackerConfig { inner_iterations: 0, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
