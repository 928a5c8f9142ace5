use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, Vector4};

use crate::radar_sim::RadarConfig;
use crate::steering::PositionJet;
use crate::tracker::BirthGridSpec;
use crate::vmp::{GaussianBelief, MeasurementContext, ReflectivityModel, XiObjective};
use crate::{Error, Result, C64, SPEED_OF_LIGHT};

/// Polar birth grid: rings of constant range crossed with lines of constant
/// sine of bearing. Point `i` lies on ring `i / sines.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthGrid {
    pub ranges: Vec<f64>,
    pub sines: Vec<f64>,
    pub range_spacing: f64,
    pub sin_spacing: f64,
}

impl BirthGrid {
    pub fn new(spec: &BirthGridSpec, radar: &RadarConfig) -> Result<Self> {
        let range_spacing = spec.range_spacing.unwrap_or(radar.range_resolution() / 2.0);
        let sin_spacing = match spec.sin_spacing {
            Some(s) => s,
            None => {
                let mut v = radar.geometry().virtual_positions();
                v.sort_by(f64::total_cmp);
                let n = v.len();
                if n < 2 {
                    // a single element has no bearing resolution
                    spec.max_sin
                } else {
                    let d = (v[n - 1] - v[0]) / (n - 1) as f64;
                    0.5 * radar.wavelength() / (n as f64 * d)
                }
            }
        };
        let ranges: Vec<f64> = (1..)
            .map(|i| i as f64 * range_spacing)
            .take_while(|r| *r <= radar.max_range)
            .collect();
        let half = (spec.max_sin / sin_spacing).floor() as i64;
        let sines: Vec<f64> = (-half..=half).map(|j| j as f64 * sin_spacing).collect();
        if ranges.is_empty() || sines.is_empty() {
            return Err(Error::Config("birth grid is empty".into()));
        }
        Ok(Self { ranges, sines, range_spacing, sin_spacing })
    }

    pub fn len(&self) -> usize {
        self.ranges.len() * self.sines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize) -> [f64; 2] {
        let r = self.ranges[i / self.sines.len()];
        let u = self.sines[i % self.sines.len()];
        [r * u, r * (1.0 - u * u).sqrt()]
    }

    /// Grid point closest to `position` in units of the grid spacings.
    pub fn nearest(&self, position: [f64; 2]) -> usize {
        let r = position[0].hypot(position[1]);
        let u = position[0] / r;
        let closest = |values: &[f64], x: f64| {
            (0..values.len())
                .min_by(|a, b| (values[*a] - x).abs().total_cmp(&(values[*b] - x).abs()))
                .unwrap()
        };
        closest(&self.ranges, r) * self.sines.len() + closest(&self.sines, u)
    }

    /// Birth state prior at point `i`: zero velocity with the given standard
    /// deviation, position uniform over the grid cell (variance `width^2 / 12`
    /// along range and cross-range).
    pub fn prior(&self, i: usize, velocity_std: f64) -> GaussianBelief {
        let [x, y] = self.point(i);
        let r = x.hypot(y);
        let (u, c) = (x / r, y / r);
        let cross = r * self.sin_spacing / c;
        let rot = Matrix2::new(u, c, c, -u);
        let local = Matrix2::new(self.range_spacing.powi(2) / 12.0, 0.0, 0.0, cross.powi(2) / 12.0);
        let pos = rot * local * rot.transpose();
        let mut cov = Matrix4::zeros();
        cov.fixed_view_mut::<2, 2>(0, 0).copy_from(&((pos + pos.transpose()) * 0.5));
        cov[(2, 2)] = velocity_std * velocity_std;
        cov[(3, 3)] = velocity_std * velocity_std;
        GaussianBelief { mean: Vector4::new(x, y, 0.0, 0.0), covariance: cov }
    }

    fn delay(&self, ring: usize) -> f64 {
        2.0 * self.ranges[ring] / SPEED_OF_LIGHT
    }
}

/// `<S_c|Lambda|Z>` at every grid point, ring by ring: the per-channel delay
/// correlation is shared by all bearings of a ring.
pub fn grid_projections(ctx: &MeasurementContext<'_>, grid: &BirthGrid) -> Vec<C64> {
    let model = ctx.model;
    let n = model.num_samples();
    let probe = ctx.probe();
    let phases = model.element_phases();
    let mut out = Vec::with_capacity(grid.len());
    for ring in 0..grid.ranges.len() {
        let h = model.delay_response(grid.delay(ring));
        let t0: Vec<C64> = probe
            .chunks(n)
            .map(|block| block.iter().zip(&h).map(|(p, hk)| p * hk).sum())
            .collect();
        for u in &grid.sines {
            let corr: C64 = phases
                .iter()
                .zip(&t0)
                .map(|(beta, t)| C64::from_polar(1.0, beta * u) * t)
                .sum();
            out.push(corr.conj());
        }
    }
    out
}

/// `<S_j|Lambda|S_c>` between one track jet and every grid point.
fn grid_cross(ctx: &MeasurementContext<'_>, grid: &BirthGrid, jet: &PositionJet) -> Result<Vec<C64>> {
    if !ctx.has_uniform_precision() {
        return (0..grid.len())
            .map(|i| Ok(ctx.cross(jet, &ctx.model.jet(grid.point(i))?)))
            .collect();
    }
    let phases = ctx.model.element_phases();
    let array: Vec<C64> = grid
        .sines
        .iter()
        .map(|u| phases.iter().map(|b| C64::from_polar(1.0, b * (u - jet.sin_bearing))).sum())
        .collect();
    let mut out = Vec::with_capacity(grid.len());
    for ring in 0..grid.ranges.len() {
        let k = ctx.delay_kernel(grid.delay(ring) - jet.delay);
        out.extend(array.iter().map(|a| a * k));
    }
    Ok(out)
}

/// Best birth candidate given the current tracks: the grid point maximizing
/// the evidence gain `q / s - ln s` of adding an object with existence 1, and
/// its existence objective with linear coefficient `g`.
pub fn best_candidate(
    ctx: &MeasurementContext<'_>,
    grid: &BirthGrid,
    projections: &[C64],
    tracks: &ReflectivityModel,
    jets: &[PositionJet],
    xi: &[f64],
    g: f64,
) -> Result<Option<(usize, XiObjective)>> {
    let k = tracks.len();
    let lambda = tracks.prior_precision;
    let energy = ctx.energy();
    let (inv, b) = if k > 0 {
        let p = tracks.precision_matrix(xi);
        let inv = p
            .cholesky()
            .ok_or_else(|| Error::Numerical("reflectivity precision not positive definite".into()))?
            .inverse();
        (inv, tracks.rhs(xi))
    } else {
        (DMatrix::zeros(0, 0), DVector::zeros(0))
    };
    let cross: Vec<Vec<C64>> = jets
        .iter()
        .map(|j| grid_cross(ctx, grid, j))
        .collect::<Result<_>>()?;
    let mut best: Option<(usize, f64, XiObjective)> = None;
    for (c, y) in projections.iter().enumerate() {
        let c0 = DVector::from_iterator(k, (0..k).map(|j| cross[j][c] * xi[j]));
        let u = &inv * &c0;
        let (r, w) = if k > 0 { (u.dotc(&c0).re, u.dotc(&b)) } else { (0.0, C64::new(0.0, 0.0)) };
        let obj = XiObjective { q: (y - w).norm_sqr(), e: energy, r, prior_precision: lambda, g };
        let s = lambda + energy - r;
        let gain = obj.q / s - s.ln();
        if best.as_ref().is_none_or(|(_, v, _)| gain > *v) {
            best = Some((c, gain, obj));
        }
    }
    Ok(best.map(|(c, _, obj)| (c, obj)))
}

/// Convenience for diagnostics: the largest normalized matched power
/// `|<S_c|Lambda|Z>|^2 / <S|Lambda|S>` over the grid.
pub fn max_matched_power(ctx: &MeasurementContext<'_>, grid: &BirthGrid) -> f64 {
    let e = ctx.energy();
    grid_projections(ctx, grid)
        .iter()
        .map(|y| y.norm_sqr() / e)
        .fold(0.0, f64::max)
}
