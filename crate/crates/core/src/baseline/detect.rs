use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::radar_sim::{RadarConfig, Snapshot};
use crate::steering::{PositionJet, SteeringModel};
use crate::tracker::{grid_projections, BirthGrid, BirthGridSpec};
use crate::vmp::MeasurementContext;
use crate::{Error, Result};

/// A point detection in Cartesian coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub position: [f64; 2],
    pub covariance: Matrix2<f64>,
    /// Estimated reflectivity magnitude.
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Target probability of at least one false detection per snapshot.
    pub false_alarm_rate: f64,
    pub grid: BirthGridSpec,
    pub max_detections: usize,
    /// Peaks closer than this many range resolutions in range and beamwidths
    /// in bearing to an earlier detection are treated as the same object.
    pub separation: f64,
    pub refine_iterations: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            false_alarm_rate: 1e-2,
            grid: BirthGridSpec::default(),
            max_detections: 16,
            separation: 1.0,
            refine_iterations: 10,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.false_alarm_rate > 0.0 && self.false_alarm_rate < 1.0) {
            return Err(Error::Config(format!(
                "false alarm rate {} outside (0, 1)",
                self.false_alarm_rate
            )));
        }
        if !(self.separation >= 0.0 && self.separation.is_finite()) {
            return Err(Error::Config(format!("separation {} must be non-negative", self.separation)));
        }
        Ok(())
    }
}

/// Matched-energy peak detector with successive cancellation.
///
/// The normalized statistic `T = |<S|Lambda|Z>|^2 / <S|Lambda|S>` is
/// exponential with unit mean at every noise-only grid point, so a union
/// bound over the grid fixes the threshold `ln(cells / P_fa)`. Each accepted
/// peak is refined by Fisher scoring, its fitted return is subtracted, and the
/// search repeats on the residual.
#[derive(Debug, Clone)]
pub struct PeakDetector {
    config: DetectorConfig,
    grid: BirthGrid,
    threshold: f64,
    range_resolution: f64,
    beamwidth: f64,
    max_range: f64,
}

impl PeakDetector {
    pub fn new(radar: &RadarConfig, config: DetectorConfig) -> Result<Self> {
        config.validate()?;
        let grid = BirthGrid::new(&config.grid, radar)?;
        let threshold = (grid.len() as f64 / config.false_alarm_rate).ln();
        let n = radar.num_channels() as f64;
        Ok(Self {
            threshold,
            range_resolution: radar.range_resolution(),
            // null-to-null half width of the virtual array in sine space
            beamwidth: 2.0 * grid.sin_spacing.max(1.0 / n),
            max_range: radar.max_range,
            grid,
            config,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn grid(&self) -> &BirthGrid {
        &self.grid
    }

    pub fn detect(&self, model: &SteeringModel, snapshot: &Snapshot) -> Result<Vec<Detection>> {
        let mut residual = snapshot.clone();
        let mut out: Vec<Detection> = Vec::new();
        let mut found: Vec<(f64, f64)> = Vec::new();
        while out.len() < self.config.max_detections {
            let ctx = MeasurementContext::new(model, &residual)?;
            let e = ctx.energy();
            if e <= 0.0 {
                break;
            }
            let map: Vec<f64> = grid_projections(&ctx, &self.grid).iter().map(|y| y.norm_sqr() / e).collect();
            let peak = (0..map.len())
                .filter(|&i| !self.masked(i, &found))
                .max_by(|a, b| map[*a].total_cmp(&map[*b]));
            let Some(i) = peak.filter(|&i| map[i] > self.threshold) else { break };
            let jet = self.refine(&ctx, self.grid.point(i))?;
            let y = ctx.projection(&jet);
            let alpha = y / e;
            let cov = self.covariance(&ctx, &jet, alpha.norm_sqr(), i);
            let s = model.steering_at(&jet);
            for (z, v) in residual.data.iter_mut().zip(&s) {
                *z -= alpha * v;
            }
            found.push((jet.range, jet.sin_bearing));
            out.push(Detection { position: jet.position, covariance: cov, amplitude: alpha.norm() });
        }
        Ok(out)
    }

    fn masked(&self, i: usize, found: &[(f64, f64)]) -> bool {
        let [x, y] = self.grid.point(i);
        let (r, u) = (x.hypot(y), x / x.hypot(y));
        let s = self.config.separation;
        found
            .iter()
            .any(|(fr, fu)| (r - fr).abs() < s * self.range_resolution && (u - fu).abs() < s * self.beamwidth)
    }

    /// Fisher scoring on the concentrated likelihood `T(p)`, starting at a
    /// grid point; steps that do not increase `T` are halved.
    fn refine(&self, ctx: &MeasurementContext<'_>, start: [f64; 2]) -> Result<PositionJet> {
        let e = ctx.energy();
        let stat = |jet: &PositionJet| {
            let (c, g) = ctx.model.correlate_with_gradient(jet, ctx.probe());
            let grad = Vector2::new(2.0 * (c.conj() * g[0]).re / e, 2.0 * (c.conj() * g[1]).re / e);
            (c.norm_sqr() / e, grad, c.norm_sqr() / (e * e))
        };
        let mut jet = ctx.model.jet(start)?;
        let (mut t, mut grad, mut a2) = stat(&jet);
        for _ in 0..self.config.refine_iterations {
            let info = effective_fisher(ctx, &jet) * (2.0 * a2);
            let Some(step) = info.try_inverse().map(|inv| inv * grad) else { break };
            let mut scale = 1.0;
            let mut accepted = false;
            for _ in 0..20 {
                let p = [jet.position[0] + scale * step[0], jet.position[1] + scale * step[1]];
                if let Ok(cand) = self.in_window(ctx.model, p) {
                    let (tc, gc, ac) = stat(&cand);
                    if tc > t {
                        (jet, t, grad, a2) = (cand, tc, gc, ac);
                        accepted = true;
                        break;
                    }
                }
                scale *= 0.5;
            }
            if !accepted || scale * step.norm() < 1e-6 {
                break;
            }
        }
        Ok(jet)
    }

    fn in_window(&self, model: &SteeringModel, p: [f64; 2]) -> Result<PositionJet> {
        let jet = model.jet(p)?;
        if jet.range > self.max_range {
            return Err(Error::Domain("refined peak beyond the maximum range".into()));
        }
        Ok(jet)
    }

    /// Inverse Fisher information of the position with the amplitude
    /// profiled out; the grid cell spread if the curvature is degenerate.
    fn covariance(&self, ctx: &MeasurementContext<'_>, jet: &PositionJet, a2: f64, cell: usize) -> Matrix2<f64> {
        let info = effective_fisher(ctx, jet) * (2.0 * a2);
        match info.try_inverse() {
            Some(c) if c[(0, 0)] > 0.0 && c.determinant() > 0.0 => (c + c.transpose()) * 0.5,
            _ => self.grid.prior(cell, 1.0).covariance.fixed_view::<2, 2>(0, 0).into_owned(),
        }
    }
}

/// `Re<dS|Lambda|dS> - Re(<dS|Lambda|S><S|Lambda|dS>) / <S|Lambda|S>` over position.
fn effective_fisher(ctx: &MeasurementContext<'_>, jet: &PositionJet) -> Matrix2<f64> {
    let f = ctx.fisher(jet);
    let m = &ctx.moments;
    let mut s = Vector2::zeros();
    for (c, beta) in ctx.model.element_phases().iter().enumerate() {
        for l in 0..2 {
            s[l] += -m.m1[c] * jet.delay_grad[l] + m.m0[c] * beta * jet.sin_grad[l];
        }
    }
    f - s * s.transpose() / ctx.energy()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radar_sim::{stream_rng, ObjectReturn, Simulator};

    fn noise_only(sim: &Simulator, seed: u64, step: usize) -> Snapshot {
        let mut rng = stream_rng(seed, step, 0xFFFF);
        sim.snapshot(step, &[], Some(&mut rng)).unwrap()
    }

    fn setup() -> (Simulator, PeakDetector) {
        let radar = RadarConfig::default();
        (Simulator::new(&radar).unwrap(), PeakDetector::new(&radar, DetectorConfig::default()).unwrap())
    }

    /// RCS giving a matched-filter SNR `|alpha|^2 <S|Lambda|S>` of `snr`.
    fn rcs_for_snr(sim: &Simulator, position: [f64; 2], snr: f64) -> f64 {
        let base = sim.component_snr(&ObjectReturn { position, rcs: 1.0 }).unwrap();
        snr / base
    }

    #[test]
    fn noise_only_false_alarms() {
        let (sim, det) = setup();
        let runs = 400;
        let total: usize = (0..runs)
            .map(|s| det.detect(sim.model(), &noise_only(&sim, 11, s)).unwrap().len())
            .sum();
        let rate = total as f64 / runs as f64;
        assert!(rate <= 0.02, "false detections per snapshot {rate}");
    }

    #[test]
    fn single_object_gives_one_nearby_detection() {
        let (sim, det) = setup();
        let radar = sim.config().clone();
        let mut good = 0;
        let runs = 200;
        for s in 0..runs {
            let p = [-12.0 + 0.1 * s as f64, 40.0];
            let rcs = rcs_for_snr(&sim, p, 100.0);
            let mut rng = stream_rng(5, s, 0xFFFF);
            let snap = sim.snapshot(s, &[ObjectReturn { position: p, rcs }], Some(&mut rng)).unwrap();
            let d = det.detect(sim.model(), &snap).unwrap();
            let close = |d: &Detection| (d.position[0] - p[0]).hypot(d.position[1] - p[1]) < radar.range_resolution();
            if d.len() == 1 && close(&d[0]) {
                good += 1;
            }
        }
        assert!(good as f64 >= 0.99 * runs as f64, "{good} of {runs}");
    }

    #[test]
    fn strong_object_has_no_sidelobe_detections() {
        let (sim, det) = setup();
        let p = [4.0, 12.0];
        let rcs = rcs_for_snr(&sim, p, 1e5);
        let mut rng = stream_rng(2, 1, 0xFFFF);
        let snap = sim.snapshot(1, &[ObjectReturn { position: p, rcs }], Some(&mut rng)).unwrap();
        let d = det.detect(sim.model(), &snap).unwrap();
        assert_eq!(d.len(), 1, "{d:?}");
    }

    #[test]
    fn close_pair_merges() {
        let (sim, det) = setup();
        let a = [22.0, 22.2];
        let b = [22.37, 22.58];
        let mut merged = 0;
        for s in 0..20 {
            let mut rng = stream_rng(9, s, 0xFFFF);
            let objs = [ObjectReturn { position: a, rcs: 0.05 }, ObjectReturn { position: b, rcs: 0.05 }];
            let d = det.detect(sim.model(), &sim.snapshot(s, &objs, Some(&mut rng)).unwrap()).unwrap();
            merged += usize::from(d.len() == 1);
        }
        assert_eq!(merged, 20);
    }

    #[test]
    fn covariance_tracks_snr() {
        let (sim, det) = setup();
        let p = [3.0, 30.0];
        let mut spread = Vec::new();
        for snr in [100.0, 1e4] {
            let rcs = rcs_for_snr(&sim, p, snr);
            let snap = sim.snapshot(1, &[ObjectReturn { position: p, rcs }], None).unwrap();
            let d = det.detect(sim.model(), &snap).unwrap();
            assert_eq!(d.len(), 1);
            let c = d[0].covariance;
            assert!(c.cholesky().is_some());
            assert!((d[0].position[0] - p[0]).abs() < 1e-3 && (d[0].position[1] - p[1]).abs() < 1e-3);
            spread.push(c.trace());
        }
        // variance scales with 1 / SNR
        assert!((spread[0] / spread[1] - 100.0).abs() < 1.0, "{spread:?}");
    }
}
