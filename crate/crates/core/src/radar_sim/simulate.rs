use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rustfft::{Fft, FftPlanner};

use crate::radar_sim::{RadarConfig, Scenario};
use crate::steering::SteeringModel;
use crate::{Error, Result, C64};

/// RNG slot reserved for receiver noise; objects use slots `0..NOISE_SLOT`.
const NOISE_SLOT: u64 = 0xFFFF;

/// One matched-filtered measurement vector and its diagonal noise precision.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step_index: usize,
    pub data: Vec<C64>,
    pub noise_precision: Arc<[f64]>,
}

impl Snapshot {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// A reflector present in one snapshot with its drawn RCS [m^2].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectReturn {
    pub position: [f64; 2],
    pub rcs: f64,
}

/// Independent RNG stream for `(seed, step, slot)`.
pub fn stream_rng(seed: u64, step: usize, slot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((step as u64) << 16) | (slot & 0xFFFF));
    rng
}

/// Swerling 3 draw: gamma with shape 2 and scale `mean / 2`.
pub fn sample_rcs<R: Rng + ?Sized>(mean_rcs: f64, rng: &mut R) -> f64 {
    debug_assert!(mean_rcs > 0.0);
    Gamma::new(2.0, mean_rcs / 2.0)
        .expect("positive shape and scale")
        .sample(rng)
}

/// Synthesizes raw receive windows and matched-filters them.
#[derive(Clone)]
pub struct Simulator {
    config: RadarConfig,
    model: Arc<SteeringModel>,
    noise_precision: Arc<[f64]>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Simulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulator").field("config", &self.config).finish_non_exhaustive()
    }
}

impl Simulator {
    pub fn new(config: &RadarConfig) -> Result<Self> {
        Self::with_model(config, Arc::new(SteeringModel::new(config)?))
    }

    pub fn with_model(config: &RadarConfig, model: Arc<SteeringModel>) -> Result<Self> {
        config.validate()?;
        let n = config.num_samples();
        if model.num_samples() != n || model.num_channels() != config.num_channels() {
            return Err(Error::Config("steering model built for a different radar".into()));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            noise_precision: noise_precision(config, &model).into(),
            config: config.clone(),
            fft: planner.plan_fft_forward(n),
            ifft: planner.plan_fft_inverse(n),
            model,
        })
    }

    pub fn config(&self) -> &RadarConfig {
        &self.config
    }

    pub fn model(&self) -> &Arc<SteeringModel> {
        &self.model
    }

    pub fn noise_precision(&self) -> &Arc<[f64]> {
        &self.noise_precision
    }

    /// Complex reflectivity as generated: radar-equation magnitude times the
    /// carrier phase of the two-way path.
    pub fn amplitude(&self, object: &ObjectReturn) -> Result<C64> {
        let jet = self.model.jet(object.position)?;
        let mag = self.config.amplitude_scale(jet.range) * object.rcs.sqrt();
        let phase = 2.0 * std::f64::consts::PI * self.config.carrier_frequency * jet.delay;
        Ok(C64::from_polar(mag, phase))
    }

    /// Matched-filter SNR `|alpha|^2 <S|Lambda|S>` of one object (linear).
    pub fn component_snr(&self, object: &ObjectReturn) -> Result<f64> {
        let a = self.amplitude(object)?;
        let energy = self.model.moments(&self.noise_precision)?.energy();
        Ok(a.norm_sqr() * energy)
    }

    /// Raw baseband receive windows, `N_s` samples per virtual channel in
    /// channel order. Noise is added when `noise_rng` is given.
    pub fn raw_baseband(
        &self,
        objects: &[ObjectReturn],
        noise_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Vec<C64>> {
        let n = self.model.num_samples();
        let channels = self.model.num_channels();
        let spectrum = self.model.spectrum();
        let mut raw = vec![C64::new(0.0, 0.0); n * channels];
        for (i, obj) in objects.iter().enumerate() {
            let jet = self
                .model
                .jet(obj.position)
                .map_err(|e| Error::Simulation(format!("object {i}: {e}")))?;
            let alpha = self.amplitude(obj)?;
            let ramp = self.model.delay_response(jet.delay);
            let array = self.model.array_response(jet.sin_bearing);
            let gain = self.model.matched_gain();
            for (c, a) in array.iter().enumerate() {
                let block = &mut raw[c * n..(c + 1) * n];
                for k in 0..n {
                    // delay_response carries |U|^2; divide one U back out
                    if gain[k] > 0.0 {
                        block[k] += alpha * a * ramp[k] / spectrum[k].conj();
                    }
                }
            }
        }
        let scale = 1.0 / n as f64;
        for block in raw.chunks_mut(n) {
            self.ifft.process(block);
            block.iter_mut().for_each(|v| *v *= scale);
        }
        if let Some(rng) = noise_rng {
            let sd = (self.config.noise_variance() / 2.0).sqrt();
            for v in raw.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *v += C64::new(sd * re, sd * im);
            }
        }
        Ok(raw)
    }

    /// Frequency-domain matched filter `Z[c, k] = conj(U_k) Y[c, k]`.
    pub fn matched_filter(&self, raw: &[C64]) -> Result<Vec<C64>> {
        self.model.check_len(raw.len())?;
        let n = self.model.num_samples();
        let spectrum = self.model.spectrum();
        let mut z = raw.to_vec();
        for block in z.chunks_mut(n) {
            self.fft.process(block);
            for (v, u) in block.iter_mut().zip(spectrum) {
                *v *= u.conj();
            }
        }
        Ok(z)
    }

    pub fn snapshot(
        &self,
        step_index: usize,
        objects: &[ObjectReturn],
        noise_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Snapshot> {
        let raw = self.raw_baseband(objects, noise_rng)?;
        Ok(Snapshot {
            step_index,
            data: self.matched_filter(&raw)?,
            noise_precision: self.noise_precision.clone(),
        })
    }

    /// Draws RCS for every alive object and simulates the snapshot of `step`.
    /// Streams are keyed by `(seed, step, object)` so runs are reproducible
    /// in any order.
    pub fn simulate_step(
        &self,
        scenario: &Scenario,
        step: usize,
        seed: u64,
    ) -> Result<(Snapshot, Vec<ObjectReturn>)> {
        let objects: Vec<ObjectReturn> = scenario
            .truth_at(step)
            .into_iter()
            .map(|(i, s)| {
                let mut rng = stream_rng(seed, step, i as u64);
                ObjectReturn {
                    position: [s[0], s[1]],
                    rcs: sample_rcs(scenario.tracks[i].mean_rcs, &mut rng),
                }
            })
            .collect();
        let mut noise = stream_rng(seed, step, NOISE_SLOT);
        let snap = self.snapshot(step, &objects, Some(&mut noise))?;
        Ok((snap, objects))
    }
}

/// Exact output precision of white input noise: `1 / (N_s sigma^2 |U_k|^2)`,
/// zero where the waveform has no energy.
fn noise_precision(config: &RadarConfig, model: &SteeringModel) -> Vec<f64> {
    let var = config.noise_variance() * model.num_samples() as f64;
    let per_channel: Vec<f64> = model
        .matched_gain()
        .iter()
        .map(|g| if *g > 0.0 { 1.0 / (var * g) } else { 0.0 })
        .collect();
    per_channel.repeat(model.num_channels())
}
