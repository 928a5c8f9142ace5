//! Geometry and spatio-temporal steering vectors.
//!
//! A snapshot is laid out channel-major: channel `c = m * N_R + j` for
//! transmitter `m` and receiver `j`, and within a channel the `N_s` DFT bins
//! of the matched-filter output. The steering vector of a point reflector at
//! delay `tau` and bearing `theta` is
//!
//! ```text
//! S[c, k] = exp(i beta_c sin(theta)) * |U_k|^2 * exp(-i 2 pi f_k tau)
//! ```
//!
//! where `U_k` is the transmit chirp spectrum, `f_k` the signed bin frequency
//! and `beta_c = 2 pi d_c / lambda` the phase slope of virtual element `c`.
//! Delays act as phase ramps, so off-grid delays need no interpolation.

use nalgebra::{DMatrix, Matrix2, Vector4};
use rustfft::FftPlanner;

use crate::radar_sim::{generate_waveform, RadarConfig};
use crate::{Error, Result, C64, SPEED_OF_LIGHT};

/// Kinematic state `[x, y, vx, vy]` in metres and metres per second.
pub type State = Vector4<f64>;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Linear MIMO array with transmit and receive element positions along x.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub tx_positions: Vec<f64>,
    pub rx_positions: Vec<f64>,
    pub carrier_frequency: f64,
}

impl ArrayGeometry {
    /// Nested layout: transmitters at `lambda/2`, receivers at `N_T lambda/2`.
    /// The virtual array is then a centred `N_T N_R` element ULA at `lambda/2`.
    pub fn nested(num_tx: usize, num_rx: usize, carrier_frequency: f64) -> Self {
        let half = SPEED_OF_LIGHT / carrier_frequency / 2.0;
        let centre = |count: usize, i: usize| i as f64 - (count as f64 - 1.0) / 2.0;
        let tx_positions = (0..num_tx).map(|m| centre(num_tx, m) * half).collect();
        let rx_positions = (0..num_rx)
            .map(|j| centre(num_rx, j) * half * num_tx as f64)
            .collect();
        Self { tx_positions, rx_positions, carrier_frequency }
    }

    pub fn num_tx(&self) -> usize {
        self.tx_positions.len()
    }

    pub fn num_rx(&self) -> usize {
        self.rx_positions.len()
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// Virtual element positions `tx_m + rx_j` in channel order `m * N_R + j`.
    pub fn virtual_positions(&self) -> Vec<f64> {
        self.tx_positions
            .iter()
            .flat_map(|t| self.rx_positions.iter().map(move |r| t + r))
            .collect()
    }

    /// Whether the sorted virtual positions form a ULA with spacing `spacing`.
    pub fn is_uniform(&self, spacing: f64) -> bool {
        let mut v = self.virtual_positions();
        v.sort_by(f64::total_cmp);
        v.windows(2)
            .all(|w| ((w[1] - w[0]) - spacing).abs() <= 1e-9 * spacing)
    }
}

/// Two-way delay [s] and bearing [rad] of a point reflector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryParams {
    pub delay: f64,
    pub bearing: f64,
}

/// Maps a position to two-way delay `2R/c` and bearing `atan(x/y)`.
pub fn state_to_geometry(position: [f64; 2]) -> Result<GeometryParams> {
    let [x, y] = position;
    let range = x.hypot(y);
    if !(range > 0.0) || !range.is_finite() {
        return Err(Error::Domain(format!(
            "bearing undefined at position ({x}, {y})"
        )));
    }
    Ok(GeometryParams {
        delay: 2.0 * range / SPEED_OF_LIGHT,
        bearing: x.atan2(y),
    })
}

/// Delay and sine-of-bearing at a position together with their first and
/// second derivatives with respect to `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionJet {
    pub position: [f64; 2],
    pub range: f64,
    pub delay: f64,
    pub sin_bearing: f64,
    pub delay_grad: [f64; 2],
    pub sin_grad: [f64; 2],
    pub delay_hess: [[f64; 2]; 2],
    pub sin_hess: [[f64; 2]; 2],
}

impl PositionJet {
    /// Fails outside the front half-plane (`y <= 0`) where the bearing leaves
    /// the field of view.
    pub fn new(position: [f64; 2]) -> Result<Self> {
        let [x, y] = position;
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::Domain(format!("non-finite position ({x}, {y})")));
        }
        if !(y > 0.0) {
            return Err(Error::Domain(format!(
                "position ({x}, {y}) outside the field of view"
            )));
        }
        let r = x.hypot(y);
        let r2 = r * r;
        let r3 = r2 * r;
        let r5 = r3 * r2;
        let k = 2.0 / SPEED_OF_LIGHT;
        Ok(Self {
            position,
            range: r,
            delay: k * r,
            sin_bearing: x / r,
            delay_grad: [k * x / r, k * y / r],
            sin_grad: [y * y / r3, -x * y / r3],
            delay_hess: [
                [k * y * y / r3, -k * x * y / r3],
                [-k * x * y / r3, k * x * x / r3],
            ],
            sin_hess: [
                [-3.0 * x * y * y / r5, y * (2.0 * x * x - y * y) / r5],
                [y * (2.0 * x * x - y * y) / r5, x * (2.0 * y * y - x * x) / r5],
            ],
        })
    }

    pub fn bearing(&self) -> f64 {
        self.sin_bearing.asin()
    }
}

/// Per-channel weighted spectral moments `sum_k w[c,k] |U_k|^4 (2 pi f_k)^p`
/// for `p = 0, 1, 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMoments {
    pub m0: Vec<f64>,
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
}

impl ChannelMoments {
    /// `<S|Lambda|S>`, identical for every in-window state.
    pub fn energy(&self) -> f64 {
        self.m0.iter().sum()
    }
}

/// Precomputed waveform spectrum and array phases for one radar setup.
#[derive(Debug, Clone)]
pub struct SteeringModel {
    num_samples: usize,
    num_channels: usize,
    frequencies: Vec<f64>,
    spectrum: Vec<C64>,
    matched_gain: Vec<f64>,
    element_phase: Vec<f64>,
    max_delay: f64,
    geometry: ArrayGeometry,
}

impl SteeringModel {
    pub fn new(config: &RadarConfig) -> Result<Self> {
        config.validate()?;
        let n = config.num_samples();
        let waveform = generate_waveform(config)?;
        let mut spectrum = vec![C64::new(0.0, 0.0); n];
        spectrum[..waveform.len()].copy_from_slice(&waveform);
        FftPlanner::new().plan_fft_forward(n).process(&mut spectrum);

        let geometry = config.geometry();
        let lambda = geometry.wavelength();
        let element_phase = geometry
            .virtual_positions()
            .iter()
            .map(|d| TWO_PI * d / lambda)
            .collect();

        Ok(Self {
            num_samples: n,
            num_channels: config.num_channels(),
            frequencies: bin_frequencies(n, config.sample_rate),
            matched_gain: spectrum.iter().map(|u| u.norm_sqr()).collect(),
            spectrum,
            element_phase,
            max_delay: config.max_delay(),
            geometry,
        })
    }

    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    pub fn num_channels(&self) -> usize {
        self.num_channels
    }

    /// Snapshot length `N_Z`.
    pub fn len(&self) -> usize {
        self.num_samples * self.num_channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Signed DFT bin frequencies [Hz].
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Transmit chirp spectrum `U_k` (unnormalised forward DFT).
    pub fn spectrum(&self) -> &[C64] {
        &self.spectrum
    }

    /// Matched-filter gain `|U_k|^2`.
    pub fn matched_gain(&self) -> &[f64] {
        &self.matched_gain
    }

    pub fn element_phases(&self) -> &[f64] {
        &self.element_phase
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn max_delay(&self) -> f64 {
        self.max_delay
    }

    /// Geometry jet at a position, checked against the field of view and the
    /// receive window.
    pub fn jet(&self, position: [f64; 2]) -> Result<PositionJet> {
        let jet = PositionJet::new(position)?;
        if jet.delay > self.max_delay {
            return Err(Error::OutOfWindow { delay: jet.delay, max_delay: self.max_delay });
        }
        Ok(jet)
    }

    /// Matched-filtered delay response `h_k(tau) = |U_k|^2 exp(-i 2 pi f_k tau)`.
    pub fn delay_response(&self, delay: f64) -> Vec<C64> {
        self.frequencies
            .iter()
            .zip(&self.matched_gain)
            .map(|(f, g)| C64::from_polar(*g, -TWO_PI * f * delay))
            .collect()
    }

    /// Virtual-array response `exp(i beta_c sin(theta))`.
    pub fn array_response(&self, sin_bearing: f64) -> Vec<C64> {
        self.element_phase
            .iter()
            .map(|b| C64::from_polar(1.0, b * sin_bearing))
            .collect()
    }

    pub fn steering_vector(&self, state: &State) -> Result<Vec<C64>> {
        Ok(self.steering_at(&self.jet([state[0], state[1]])?))
    }

    pub fn steering_at(&self, jet: &PositionJet) -> Vec<C64> {
        let h = self.delay_response(jet.delay);
        let a = self.array_response(jet.sin_bearing);
        let mut out = Vec::with_capacity(self.len());
        for ac in &a {
            out.extend(h.iter().map(|hk| ac * hk));
        }
        out
    }

    /// Jacobian `dS/dPhi` as an `N_Z x 4` matrix; velocity columns are zero.
    pub fn steering_gradient(&self, state: &State) -> Result<DMatrix<C64>> {
        let jet = self.jet([state[0], state[1]])?;
        let s = self.steering_at(&jet);
        let n = self.num_samples;
        let mut grad = DMatrix::<C64>::zeros(self.len(), 4);
        for (c, beta) in self.element_phase.iter().enumerate() {
            for k in 0..n {
                let idx = c * n + k;
                let wf = TWO_PI * self.frequencies[k];
                for l in 0..2 {
                    let dphi = -wf * jet.delay_grad[l] + beta * jet.sin_grad[l];
                    grad[(idx, l)] = C64::new(0.0, dphi) * s[idx];
                }
            }
        }
        Ok(grad)
    }

    /// Spectral moments of a diagonal noise precision laid out like a snapshot.
    pub fn moments(&self, precision: &[f64]) -> Result<ChannelMoments> {
        self.check_len(precision.len())?;
        let n = self.num_samples;
        let mut m = ChannelMoments {
            m0: vec![0.0; self.num_channels],
            m1: vec![0.0; self.num_channels],
            m2: vec![0.0; self.num_channels],
        };
        for c in 0..self.num_channels {
            for k in 0..n {
                let g = self.matched_gain[k];
                let base = precision[c * n + k] * g * g;
                let wf = TWO_PI * self.frequencies[k];
                m.m0[c] += base;
                m.m1[c] += base * wf;
                m.m2[c] += base * wf * wf;
            }
        }
        Ok(m)
    }

    /// Position block of `Re <grad S | Lambda | grad S>` at `jet`.
    pub fn fisher_gram(&self, jet: &PositionJet, moments: &ChannelMoments) -> Matrix2<f64> {
        let (t, u) = (jet.delay_grad, jet.sin_grad);
        let mut g = Matrix2::zeros();
        for (c, beta) in self.element_phase.iter().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    g[(i, j)] += moments.m2[c] * t[i] * t[j]
                        - moments.m1[c] * beta * (t[i] * u[j] + u[i] * t[j])
                        + moments.m0[c] * beta * beta * u[i] * u[j];
                }
            }
        }
        g
    }

    /// Derivatives of [`Self::fisher_gram`] with respect to `x` and `y`.
    pub fn fisher_gram_derivative(
        &self,
        jet: &PositionJet,
        moments: &ChannelMoments,
    ) -> [Matrix2<f64>; 2] {
        let (t, u) = (jet.delay_grad, jet.sin_grad);
        let (th, uh) = (jet.delay_hess, jet.sin_hess);
        let mut d = [Matrix2::zeros(), Matrix2::zeros()];
        for (c, beta) in self.element_phase.iter().enumerate() {
            let (m0, m1, m2) = (moments.m0[c], moments.m1[c], moments.m2[c]);
            for (l, dl) in d.iter_mut().enumerate() {
                for i in 0..2 {
                    for j in 0..2 {
                        dl[(i, j)] += m2 * (th[i][l] * t[j] + t[i] * th[j][l])
                            - m1 * beta
                                * (th[i][l] * u[j] + t[i] * uh[j][l] + uh[i][l] * t[j] + u[i] * th[j][l])
                            + m0 * beta * beta * (uh[i][l] * u[j] + u[i] * uh[j][l]);
                    }
                }
            }
        }
        d
    }

    /// `sum_n probe[n] S[n]` at `jet`. With `probe = conj(X) .* w` this is
    /// `<X|Lambda|S>`.
    pub fn correlate(&self, jet: &PositionJet, probe: &[C64]) -> C64 {
        self.correlate_with_gradient(jet, probe).0
    }

    /// [`Self::correlate`] and its derivatives with respect to `x` and `y`.
    pub fn correlate_with_gradient(&self, jet: &PositionJet, probe: &[C64]) -> (C64, [C64; 2]) {
        debug_assert_eq!(probe.len(), self.len());
        let n = self.num_samples;
        let h = self.delay_response(jet.delay);
        let mut value = C64::new(0.0, 0.0);
        let mut grad = [C64::new(0.0, 0.0); 2];
        for (c, beta) in self.element_phase.iter().enumerate() {
            let block = &probe[c * n..(c + 1) * n];
            let mut t0 = C64::new(0.0, 0.0);
            let mut t1 = C64::new(0.0, 0.0);
            for k in 0..n {
                let v = block[k] * h[k];
                t0 += v;
                t1 += v * (TWO_PI * self.frequencies[k]);
            }
            let a = C64::from_polar(1.0, beta * jet.sin_bearing);
            value += a * t0;
            for l in 0..2 {
                let inner = -t1 * jet.delay_grad[l] + t0 * (beta * jet.sin_grad[l]);
                grad[l] += C64::new(0.0, 1.0) * a * inner;
            }
        }
        (value, grad)
    }

    /// `<S(a)|Lambda|S(b)>` for a diagonal precision.
    pub fn cross(&self, a: &PositionJet, b: &PositionJet, precision: &[f64]) -> C64 {
        let n = self.num_samples;
        let dtau = b.delay - a.delay;
        let mut total = C64::new(0.0, 0.0);
        for (c, beta) in self.element_phase.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                let g = self.matched_gain[k];
                let w = precision[c * n + k] * g * g;
                acc += C64::from_polar(w, -TWO_PI * self.frequencies[k] * dtau);
            }
            total += C64::from_polar(1.0, beta * (b.sin_bearing - a.sin_bearing)) * acc;
        }
        total
    }

    pub(crate) fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::Dimension { expected: self.len(), got });
        }
        Ok(())
    }
}

/// Signed frequencies of an `n`-point DFT at sample rate `fs`.
pub fn bin_frequencies(n: usize, fs: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let signed = if 2 * k < n { k as f64 } else { k as f64 - n as f64 };
            signed * fs / n as f64
        })
        .collect()
}

/// `sum_n conj(a[n]) w[n] b[n]`.
pub fn weighted_inner(a: &[C64], w: &[f64], b: &[C64]) -> C64 {
    a.iter()
        .zip(w)
        .zip(b)
        .map(|((x, wn), y)| x.conj() * y * *wn)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn model() -> SteeringModel {
        SteeringModel::new(&RadarConfig::default()).unwrap()
    }

    fn flat_precision(m: &SteeringModel) -> Vec<f64> {
        vec![1.0; m.len()]
    }

    #[test]
    fn geometry_examples() {
        let g = state_to_geometry([30.0, 40.0]).unwrap();
        assert!((g.delay - 100.0 / SPEED_OF_LIGHT).abs() < 1e-18);
        assert!((g.delay - 333.564e-9).abs() < 1e-12);
        assert!((g.bearing - (0.75f64).atan()).abs() < 1e-15);
        assert!((g.bearing - 0.6435).abs() < 1e-4);

        let g = state_to_geometry([0.0, 10.0]).unwrap();
        assert_eq!(g.bearing, 0.0);
        assert!((g.delay - 20.0 / SPEED_OF_LIGHT).abs() < 1e-20);

        let g = state_to_geometry([10.0, 10.0]).unwrap();
        assert!((g.bearing - FRAC_PI_4).abs() < 1e-15);
        assert!((g.delay * SPEED_OF_LIGHT / 2.0 - 14.142_135_6).abs() < 1e-6);

        assert!(matches!(state_to_geometry([0.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn nested_layout_is_half_wavelength_ula() {
        let g = ArrayGeometry::nested(3, 3, 10e9);
        let half = g.wavelength() / 2.0;
        assert!(g.is_uniform(half));
        assert_eq!(g.virtual_positions().len(), 9);
        let sum: f64 = g.virtual_positions().iter().sum();
        assert!(sum.abs() < 1e-12);
        // receivers at wavelength spacing would not give a half-wavelength ULA
        let naive = ArrayGeometry {
            tx_positions: vec![0.0, half, 2.0 * half],
            rx_positions: vec![0.0, 2.0 * half, 4.0 * half],
            carrier_frequency: 10e9,
        };
        assert!(!naive.is_uniform(half));
    }

    #[test]
    fn jet_matches_finite_differences() {
        let h = 1e-4;
        for p in [[3.0, 40.0], [-20.0, 15.0], [30.0, 45.0]] {
            let jet = PositionJet::new(p).unwrap();
            for l in 0..2 {
                let mut pp = p;
                let mut pm = p;
                pp[l] += h;
                pm[l] -= h;
                let (jp, jm) = (PositionJet::new(pp).unwrap(), PositionJet::new(pm).unwrap());
                let dtau = (jp.delay - jm.delay) / (2.0 * h);
                let du = (jp.sin_bearing - jm.sin_bearing) / (2.0 * h);
                assert!((dtau - jet.delay_grad[l]).abs() < 1e-7 * jet.delay_grad[l].abs().max(1e-12));
                assert!((du - jet.sin_grad[l]).abs() < 1e-7);
                for i in 0..2 {
                    let d2tau = (jp.delay_grad[i] - jm.delay_grad[i]) / (2.0 * h);
                    let d2u = (jp.sin_grad[i] - jm.sin_grad[i]) / (2.0 * h);
                    assert!((d2tau - jet.delay_hess[i][l]).abs() < 1e-6 * 2.0 / SPEED_OF_LIGHT);
                    assert!((d2u - jet.sin_hess[i][l]).abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn broadside_array_factor_is_one() {
        let m = model();
        let s = m.steering_vector(&State::new(0.0, 50.0, 3.0, -2.0)).unwrap();
        let h = m.delay_response(100.0 / SPEED_OF_LIGHT);
        let n = m.num_samples();
        for c in 0..m.num_channels() {
            for k in 0..n {
                assert!((s[c * n + k] - h[k]).norm() <= 1e-12 * h[k].norm().max(1e-300));
            }
        }
    }

    #[test]
    fn out_of_window_and_fov_errors() {
        let m = model();
        assert!(matches!(
            m.steering_vector(&State::new(0.0, 120.0, 0.0, 0.0)),
            Err(Error::OutOfWindow { .. })
        ));
        assert!(matches!(
            m.steering_vector(&State::new(10.0, -1.0, 0.0, 0.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn energy_is_position_invariant() {
        let m = model();
        let w = flat_precision(&m);
        let reference = m.moments(&w).unwrap().energy();
        for p in [[0.0, 5.0], [40.0, 60.0], [-70.0, 70.0], [0.0, 99.0]] {
            let s = m.steering_vector(&State::new(p[0], p[1], 0.0, 0.0)).unwrap();
            let e = weighted_inner(&s, &w, &s).re;
            assert!((e / reference - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn fisher_gram_matches_explicit_gradient() {
        let m = model();
        let w: Vec<f64> = (0..m.len()).map(|i| 1.0 + 0.3 * ((i * 7 % 13) as f64)).collect();
        let mom = m.moments(&w).unwrap();
        let state = State::new(12.0, 33.0, 0.0, 0.0);
        let grad = m.steering_gradient(&state).unwrap();
        let jet = m.jet([12.0, 33.0]).unwrap();
        let g = m.fisher_gram(&jet, &mom);
        for i in 0..2 {
            for j in 0..2 {
                let gi = grad.column(i);
                let gj = grad.column(j);
                let explicit: C64 = (0..m.len()).map(|n| gi[n].conj() * w[n] * gj[n]).sum();
                assert!((explicit.re - g[(i, j)]).abs() < 1e-9 * g[(i, i)].abs());
            }
        }
        // derivative of the gram by central differences
        let d = m.fisher_gram_derivative(&jet, &mom);
        let h = 1e-5;
        for l in 0..2 {
            let mut pp = [12.0, 33.0];
            let mut pm = pp;
            pp[l] += h;
            pm[l] -= h;
            let gp = m.fisher_gram(&m.jet(pp).unwrap(), &mom);
            let gm = m.fisher_gram(&m.jet(pm).unwrap(), &mom);
            let fd = (gp - gm) / (2.0 * h);
            assert!((fd - d[l]).norm() < 1e-5 * d[l].norm().max(g.norm() * 1e-3));
        }
    }

    #[test]
    fn correlate_matches_dense_products() {
        let m = model();
        let probe: Vec<C64> = (0..m.len())
            .map(|i| C64::from_polar(1.0 + (i % 5) as f64, 0.37 * i as f64))
            .collect();
        let state = State::new(-8.0, 25.0, 0.0, 0.0);
        let s = m.steering_vector(&state).unwrap();
        let grad = m.steering_gradient(&state).unwrap();
        let jet = m.jet([-8.0, 25.0]).unwrap();
        let (v, g) = m.correlate_with_gradient(&jet, &probe);
        let dense: C64 = probe.iter().zip(&s).map(|(q, x)| q * x).sum();
        assert!((v - dense).norm() < 1e-9 * dense.norm());
        for l in 0..2 {
            let dense_g: C64 = probe.iter().zip(grad.column(l).iter()).map(|(q, x)| q * x).sum();
            assert!((g[l] - dense_g).norm() < 1e-9 * dense_g.norm());
        }
    }

    #[test]
    fn cross_matches_dense_inner_product() {
        let m = model();
        let w: Vec<f64> = (0..m.len()).map(|i| 0.5 + (i % 3) as f64).collect();
        let (pa, pb) = ([5.0, 30.0], [5.3, 30.4]);
        let sa = m.steering_vector(&State::new(pa[0], pa[1], 0.0, 0.0)).unwrap();
        let sb = m.steering_vector(&State::new(pb[0], pb[1], 0.0, 0.0)).unwrap();
        let dense = weighted_inner(&sa, &w, &sb);
        let fast = m.cross(&m.jet(pa).unwrap(), &m.jet(pb).unwrap(), &w);
        assert!((dense - fast).norm() < 1e-9 * dense.norm());
    }

    #[test]
    fn bin_frequencies_are_signed() {
        let f = bin_frequencies(5, 5.0);
        assert_eq!(f, vec![0.0, 1.0, 2.0, -2.0, -1.0]);
        let f = bin_frequencies(4, 4.0);
        assert_eq!(f, vec![0.0, 1.0, -2.0, -1.0]);
    }
}
