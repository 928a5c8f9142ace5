use nalgebra::{DMatrix, Matrix2};

use crate::radar_sim::Snapshot;
use crate::steering::{ChannelMoments, PositionJet, SteeringModel};
use crate::vmp::GaussianBelief;
use crate::{Error, Result, C64};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Per-snapshot quantities shared by all updates of one time step.
#[derive(Debug, Clone)]
pub struct MeasurementContext<'a> {
    pub model: &'a SteeringModel,
    pub snapshot: &'a Snapshot,
    pub moments: ChannelMoments,
    /// `conj(Z) .* diag(Lambda_Z)`, so that `sum probe * S = <Z|Lambda|S>`.
    probe: Vec<C64>,
    /// `w_k |U_k|^4` when every channel shares the same precision.
    kernel: Option<Vec<f64>>,
}

impl<'a> MeasurementContext<'a> {
    pub fn new(model: &'a SteeringModel, snapshot: &'a Snapshot) -> Result<Self> {
        model.check_len(snapshot.data.len())?;
        model.check_len(snapshot.noise_precision.len())?;
        if snapshot.noise_precision.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::Numerical("noise precision must be finite and non-negative".into()));
        }
        let moments = model.moments(&snapshot.noise_precision)?;
        let probe = snapshot
            .data
            .iter()
            .zip(snapshot.noise_precision.iter())
            .map(|(z, w)| z.conj() * *w)
            .collect();
        let n = model.num_samples();
        let first = &snapshot.noise_precision[..n];
        let uniform = snapshot.noise_precision.chunks(n).all(|c| c == first);
        let kernel = uniform.then(|| {
            first
                .iter()
                .zip(model.matched_gain())
                .map(|(w, g)| w * g * g)
                .collect()
        });
        Ok(Self { model, snapshot, moments, probe, kernel })
    }

    /// `<S|Lambda|S>`, the same for every in-window position.
    pub fn energy(&self) -> f64 {
        self.moments.energy()
    }

    pub fn probe(&self) -> &[C64] {
        &self.probe
    }

    /// `<S(jet)|Lambda|Z>`.
    pub fn projection(&self, jet: &PositionJet) -> C64 {
        self.model.correlate(jet, &self.probe).conj()
    }

    pub fn fisher(&self, jet: &PositionJet) -> Matrix2<f64> {
        self.model.fisher_gram(jet, &self.moments)
    }

    /// `<S(a)|Lambda|S(b)>`.
    pub fn cross(&self, a: &PositionJet, b: &PositionJet) -> C64 {
        match &self.kernel {
            Some(_) => {
                let array: C64 = self
                    .model
                    .element_phases()
                    .iter()
                    .map(|beta| C64::from_polar(1.0, beta * (b.sin_bearing - a.sin_bearing)))
                    .sum();
                array * self.delay_kernel(b.delay - a.delay)
            }
            None => self.model.cross(a, b, &self.snapshot.noise_precision),
        }
    }

    /// `sum_k w_k |U_k|^4 exp(-i 2 pi f_k dtau)` for channel-uniform precision.
    pub(crate) fn delay_kernel(&self, dtau: f64) -> C64 {
        let kernel = self.kernel.as_ref().expect("uniform precision");
        self.model
            .frequencies()
            .iter()
            .zip(kernel)
            .map(|(f, w)| C64::from_polar(*w, -TWO_PI * f * dtau))
            .sum()
    }

    pub(crate) fn has_uniform_precision(&self) -> bool {
        self.kernel.is_some()
    }

    /// Delta-method expectation of `<S_k|Lambda|S_j>` over independent
    /// state beliefs: cross terms at the means, and on the diagonal the
    /// energy plus `tr(P_pos * Fisher)`.
    pub fn expected_gram(&self, jets: &[PositionJet], beliefs: &[GaussianBelief]) -> DMatrix<C64> {
        let k = jets.len();
        let energy = self.energy();
        let mut gram = DMatrix::<C64>::zeros(k, k);
        for i in 0..k {
            let f = self.fisher(&jets[i]);
            let p = beliefs[i].covariance.fixed_view::<2, 2>(0, 0);
            let spread = (p * f).trace();
            gram[(i, i)] = C64::new(energy + spread, 0.0);
            for j in i + 1..k {
                let v = self.cross(&jets[i], &jets[j]);
                gram[(i, j)] = v;
                gram[(j, i)] = v.conj();
            }
        }
        gram
    }

    /// Jets of every belief mean; fails if a mean leaves the window.
    pub fn jets(&self, beliefs: &[GaussianBelief]) -> Result<Vec<PositionJet>> {
        beliefs.iter().map(|b| self.model.jet(b.position())).collect()
    }
}
