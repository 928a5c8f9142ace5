use serde::{Deserialize, Serialize};

use crate::steering::ArrayGeometry;
use crate::{Error, Result, BOLTZMANN, SPEED_OF_LIGHT};

/// Receiver noise temperature used when no explicit noise variance is given [K].
pub const NOISE_TEMPERATURE: f64 = 290.0;

/// Radar front-end and waveform parameters.
///
/// Every field has a default taken from the reference 3x3 MIMO setup, so a
/// scenario file only needs to list the keys it overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarConfig {
    pub num_tx: usize,
    pub num_rx: usize,
    /// Pulse repetition frequency [Hz].
    pub prf: f64,
    /// Carrier frequency [Hz].
    pub carrier_frequency: f64,
    /// Chirp bandwidth [Hz].
    pub bandwidth: f64,
    /// Duration of one transmitter's chirp [s].
    pub pulse_duration: f64,
    /// Complex baseband sample rate [Hz].
    pub sample_rate: f64,
    /// Maximum instrumented range [m].
    pub max_range: f64,
    /// Per-sample complex noise variance [W]. `None` means `k_b * 290 K * bandwidth`.
    pub noise_variance: Option<f64>,
    /// Transmit field amplitude at 1 m [V/m].
    pub tx_amplitude: f64,
    pub antenna_gain: f64,
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self {
            num_tx: 3,
            num_rx: 3,
            prf: 10.0,
            carrier_frequency: 10e9,
            bandwidth: 20e6,
            pulse_duration: 3.6e-6,
            sample_rate: 256e6,
            max_range: 100.0,
            noise_variance: None,
            tx_amplitude: 0.53,
            antenna_gain: 1.0,
        }
    }
}

impl RadarConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_tx == 0 || self.num_rx == 0 {
            return Err(Error::Config("num_tx and num_rx must be positive".into()));
        }
        let positive = [
            ("prf", self.prf),
            ("carrier_frequency", self.carrier_frequency),
            ("bandwidth", self.bandwidth),
            ("pulse_duration", self.pulse_duration),
            ("sample_rate", self.sample_rate),
            ("max_range", self.max_range),
            ("tx_amplitude", self.tx_amplitude),
            ("antenna_gain", self.antenna_gain),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {value}")));
            }
        }
        if let Some(v) = self.noise_variance {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("noise_variance must be positive, got {v}")));
            }
        }
        if self.sample_rate < self.bandwidth {
            return Err(Error::Config(format!(
                "sample_rate {} Hz below bandwidth {} Hz",
                self.sample_rate, self.bandwidth
            )));
        }
        if self.pulse_samples() < 8 {
            return Err(Error::Config(format!(
                "pulse spans {} samples; at least 8 are required",
                self.pulse_samples()
            )));
        }
        Ok(())
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
            .unwrap_or(BOLTZMANN * NOISE_TEMPERATURE * self.bandwidth)
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// Time between MIMO pulses [s].
    pub fn dt(&self) -> f64 {
        1.0 / self.prf
    }

    /// Largest two-way delay the receive window supports [s].
    pub fn max_delay(&self) -> f64 {
        2.0 * self.max_range / SPEED_OF_LIGHT
    }

    /// Receive window length `2 R_max / c + T_Tx` [s].
    pub fn receive_window(&self) -> f64 {
        self.max_delay() + self.pulse_duration
    }

    /// Samples per transmit pulse.
    pub fn pulse_samples(&self) -> usize {
        (self.pulse_duration * self.sample_rate).round() as usize
    }

    /// Samples per receive window, `N_s`.
    pub fn num_samples(&self) -> usize {
        // guard against 1092.0000000001 style round-up
        let exact = self.receive_window() * self.sample_rate;
        (exact - 1e-9).ceil() as usize
    }

    pub fn num_channels(&self) -> usize {
        self.num_tx * self.num_rx
    }

    /// Length of a matched-filtered snapshot, `N_s * N_T * N_R`.
    pub fn snapshot_len(&self) -> usize {
        self.num_samples() * self.num_channels()
    }

    /// Range resolution `c / (2 BW)` [m].
    pub fn range_resolution(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.bandwidth)
    }

    pub fn geometry(&self) -> ArrayGeometry {
        ArrayGeometry::nested(self.num_tx, self.num_rx, self.carrier_frequency)
    }

    /// Radar-equation amplitude factor at range `range` for a unit RCS:
    /// `A_tx G lambda / ((4 pi)^{3/2} R^2)`.
    pub fn amplitude_scale(&self, range: f64) -> f64 {
        let four_pi = 4.0 * std::f64::consts::PI;
        self.tx_amplitude * self.antenna_gain * self.wavelength()
            / (four_pi.powf(1.5) * range * range)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_dimensions() {
        let cfg = RadarConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.pulse_samples(), 922);
        assert_eq!(cfg.num_samples(), 1093);
        assert_eq!(cfg.snapshot_len(), 1093 * 9);
        assert!((cfg.range_resolution() - 7.4948).abs() < 1e-3);
        assert!((cfg.noise_variance() - 8.00776e-14).abs() < 1e-18);
        assert!((cfg.dt() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn short_pulse_rejected() {
        let cfg = RadarConfig { pulse_duration: 7.0 / 256e6, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn undersampled_rejected() {
        let cfg = RadarConfig { sample_rate: 10e6, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn partial_json_uses_defaults() {
        let cfg: RadarConfig = serde_json::from_str(r#"{"prf": 20.0}"#).unwrap();
        assert_eq!(cfg.prf, 20.0);
        assert_eq!(cfg.num_tx, 3);
        assert!(serde_json::from_str::<RadarConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
