use crate::radar_sim::RadarConfig;
use crate::{Result, C64};

/// One transmit pulse: a unit-amplitude linear chirp sweeping `[-BW/2, BW/2]`
/// over `T_Tx`, sampled at `f_s`.
///
/// Every transmitter uses the same chirp; orthogonality comes from the time
/// slot each transmitter is given.
pub fn generate_waveform(config: &RadarConfig) -> Result<Vec<C64>> {
    config.validate()?;
    let n = config.pulse_samples();
    let rate = config.bandwidth / config.pulse_duration;
    let pi = std::f64::consts::PI;
    Ok((0..n)
        .map(|s| {
            let t = s as f64 / config.sample_rate;
            C64::from_polar(1.0, pi * rate * t * t - pi * config.bandwidth * t)
        })
        .collect())
}

/// Instantaneous frequency of the chirp at time `t` into the pulse [Hz].
pub fn instantaneous_frequency(config: &RadarConfig, t: f64) -> f64 {
    config.bandwidth / config.pulse_duration * t - config.bandwidth / 2.0
}

/// `sum |u|^2 / f_s`, the pulse energy for a unit load [J].
pub fn pulse_energy(waveform: &[C64], sample_rate: f64) -> f64 {
    waveform.iter().map(|u| u.norm_sqr()).sum::<f64>() / sample_rate
}
