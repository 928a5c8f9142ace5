use nalgebra::{Matrix2, Matrix4, Vector4};

use crate::steering::PositionJet;
use crate::vmp::{GaussianMessage, MeasurementContext};
use crate::{Error, Result, C64};

/// Expected negative log-likelihood `L(m, v)` of a position under
/// `N(m, diag(v))`, with its gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodEval {
    pub value: f64,
    pub grad_mean: [f64; 2],
    pub grad_var: [f64; 2],
}

/// Data factor that can be projected onto a Gaussian position message.
pub trait DataLikelihood {
    fn evaluate(&self, mean: [f64; 2], variance: [f64; 2]) -> Result<LikelihoodEval>;

    /// Approximate second derivative of `L` along each axis at `mean`; sets
    /// the scale of the search coordinates.
    fn curvature(&self, mean: [f64; 2]) -> Result<[f64; 2]>;
}

/// `L = 1/2 (m - mu)^T P (m - mu) + 1/2 sum_j v_j P_jj`, the expected
/// negative log of a Gaussian factor. Its projection is exactly
/// `N(mu, diag(1 / P_jj))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticLikelihood {
    pub mean: [f64; 2],
    pub precision: Matrix2<f64>,
}

impl DataLikelihood for QuadraticLikelihood {
    fn evaluate(&self, mean: [f64; 2], variance: [f64; 2]) -> Result<LikelihoodEval> {
        let d = nalgebra::Vector2::new(mean[0] - self.mean[0], mean[1] - self.mean[1]);
        let pd = self.precision * d;
        let p = &self.precision;
        Ok(LikelihoodEval {
            value: 0.5 * d.dot(&pd) + 0.5 * (variance[0] * p[(0, 0)] + variance[1] * p[(1, 1)]),
            grad_mean: [pd[0], pd[1]],
            grad_var: [0.5 * p[(0, 0)], 0.5 * p[(1, 1)]],
        })
    }

    fn curvature(&self, _mean: [f64; 2]) -> Result<[f64; 2]> {
        Ok([self.precision[(0, 0)], self.precision[(1, 1)]])
    }
}

/// Expected data misfit of one object with the others held at their means:
///
/// ```text
/// L(m, v) = -2 Re{a <R|Lambda|S(m)>} + c (E0 + sum_j v_j F_jj(m))
/// ```
///
/// with `a = E[alpha_k] xi_k`, `c = E|alpha_k|^2 xi_k`, residual
/// `R = Z - sum_{j != k} E[alpha_j] xi_j S_j` and `F` the Fisher gram.
#[derive(Debug, Clone)]
pub struct RadarLikelihood<'c, 'a> {
    ctx: &'c MeasurementContext<'a>,
    probe: Vec<C64>,
    weight: C64,
    energy_coef: f64,
}

impl<'c, 'a> RadarLikelihood<'c, 'a> {
    /// `marginals[j] = (E[alpha_j], Var[alpha_j])`.
    pub fn new(
        ctx: &'c MeasurementContext<'a>,
        jets: &[PositionJet],
        marginals: &[(C64, f64)],
        xi: &[f64],
        k: usize,
    ) -> Result<Self> {
        let n = jets.len();
        if marginals.len() != n || xi.len() != n {
            return Err(Error::Dimension { expected: n, got: marginals.len().min(xi.len()) });
        }
        if k >= n {
            return Err(Error::Dimension { expected: n, got: k });
        }
        let mut probe = ctx.probe().to_vec();
        let w = &ctx.snapshot.noise_precision;
        for j in (0..n).filter(|&j| j != k && xi[j] > 0.0) {
            let a = marginals[j].0 * xi[j];
            let s = ctx.model.steering_at(&jets[j]);
            for ((p, sv), wn) in probe.iter_mut().zip(&s).zip(w.iter()) {
                *p -= (a * sv).conj() * *wn;
            }
        }
        let (mean, var) = marginals[k];
        Ok(Self {
            ctx,
            probe,
            weight: mean * xi[k],
            energy_coef: (mean.norm_sqr() + var) * xi[k],
        })
    }

    /// Whether the object carries any signal energy at all.
    pub fn is_informative(&self) -> bool {
        self.energy_coef * self.ctx.energy() >= 1e-12
    }
}

impl DataLikelihood for RadarLikelihood<'_, '_> {
    fn evaluate(&self, mean: [f64; 2], variance: [f64; 2]) -> Result<LikelihoodEval> {
        let model = self.ctx.model;
        let jet = model.jet(mean)?;
        let (corr, dcorr) = model.correlate_with_gradient(&jet, &self.probe);
        let f = self.ctx.fisher(&jet);
        let df = model.fisher_gram_derivative(&jet, &self.ctx.moments);
        let c = self.energy_coef;
        let spread = variance[0] * f[(0, 0)] + variance[1] * f[(1, 1)];
        let mut grad_mean = [0.0; 2];
        for (l, g) in grad_mean.iter_mut().enumerate() {
            *g = -2.0 * (self.weight * dcorr[l]).re
                + c * (variance[0] * df[l][(0, 0)] + variance[1] * df[l][(1, 1)]);
        }
        Ok(LikelihoodEval {
            value: -2.0 * (self.weight * corr).re + c * (self.ctx.energy() + spread),
            grad_mean,
            grad_var: [c * f[(0, 0)], c * f[(1, 1)]],
        })
    }

    fn curvature(&self, mean: [f64; 2]) -> Result<[f64; 2]> {
        let f = self.ctx.fisher(&self.ctx.model.jet(mean)?);
        Ok([2.0 * self.energy_coef * f[(0, 0)], 2.0 * self.energy_coef * f[(1, 1)]])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionOptions {
    pub max_iterations: usize,
    /// Bound on the largest gradient entry in scaled coordinates.
    pub tolerance: f64,
    pub max_backtracks: usize,
    pub armijo: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self { max_iterations: 50, tolerance: 1e-6, max_backtracks: 30, armijo: 1e-4 }
    }
}

/// Gaussian position message `N(mean, diag(variance))` fitted to a data factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub mean: [f64; 2],
    pub variance: [f64; 2],
    /// `L(m, v) - 1/2 sum ln v` at the returned point.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl Projection {
    pub fn uninformative(mean: [f64; 2]) -> Self {
        Self {
            mean,
            variance: [f64::INFINITY; 2],
            objective: 0.0,
            iterations: 0,
            converged: true,
        }
    }

    pub fn is_informative(&self) -> bool {
        self.variance.iter().all(|v| v.is_finite())
    }

    pub fn message(&self) -> GaussianMessage {
        if self.is_informative() {
            GaussianMessage::position(self.mean, self.variance)
        } else {
            GaussianMessage::uninformative(Vector4::new(self.mean[0], self.mean[1], 0.0, 0.0))
        }
    }
}

/// Minimizes `D(m, v) = L(m, v) - 1/2 sum_j ln v_j`, the KL divergence from a
/// diagonal Gaussian to the normalized data factor up to a constant, by BFGS
/// in the coordinates `z_j = s_j (m_j - m0_j)`, `ln(v_j s_j^2)` with `s_j^2`
/// the curvature at the start. When the iteration budget runs out the best
/// point is returned with `converged = false`.
pub fn minimize_kl<L: DataLikelihood + ?Sized>(
    likelihood: &L,
    start: [f64; 2],
    options: &ProjectionOptions,
) -> Result<Projection> {
    let curv = likelihood.curvature(start)?;
    if !curv.iter().all(|c| *c > 0.0 && c.is_finite()) {
        return Err(Error::Numerical(format!("data factor curvature {curv:?} not positive")));
    }
    let scale = [curv[0].sqrt(), curv[1].sqrt()];
    let point = |t: &Vector4<f64>| {
        let mean = [start[0] + t[0] / scale[0], start[1] + t[1] / scale[1]];
        let var = [t[2].exp() / curv[0], t[3].exp() / curv[1]];
        (mean, var)
    };
    let eval = |t: &Vector4<f64>| -> Result<(f64, Vector4<f64>)> {
        let (mean, var) = point(t);
        let e = likelihood.evaluate(mean, var)?;
        let value = e.value - 0.5 * (var[0].ln() + var[1].ln());
        let grad = Vector4::new(
            e.grad_mean[0] / scale[0],
            e.grad_mean[1] / scale[1],
            var[0] * e.grad_var[0] - 0.5,
            var[1] * e.grad_var[1] - 0.5,
        );
        if value.is_finite() && grad.iter().all(|g| g.is_finite()) {
            Ok((value, grad))
        } else {
            Err(Error::Numerical("non-finite projection objective".into()))
        }
    };

    let h0 = Matrix4::from_diagonal(&Vector4::new(1.0, 1.0, 2.0, 2.0));
    let mut theta = Vector4::zeros();
    let (mut f, mut g) = eval(&theta)?;
    let mut h = h0;
    let mut iterations = 0;
    let mut converged = g.amax() < options.tolerance;
    while !converged && iterations < options.max_iterations {
        iterations += 1;
        let mut p = -(h * g);
        let mut slope = g.dot(&p);
        if slope >= 0.0 {
            h = h0;
            p = -(h * g);
            slope = g.dot(&p);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=options.max_backtracks {
            let trial = theta + p * step;
            if let Ok((ft, gt)) = eval(&trial) {
                if ft <= f + options.armijo * step * slope {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((next, fn_, gn)) = accepted else {
            break;
        };
        let s = next - theta;
        let y = gn - g;
        let ys = y.dot(&s);
        if ys > 1e-12 {
            let rho = 1.0 / ys;
            let i = Matrix4::identity();
            h = (i - s * y.transpose() * rho) * h * (i - y * s.transpose() * rho)
                + s * s.transpose() * rho;
        }
        theta = next;
        f = fn_;
        g = gn;
        converged = g.amax() < options.tolerance;
    }
    let (mean, variance) = point(&theta);
    Ok(Projection { mean, variance, objective: f, iterations, converged })
}

/// Data message of object `k` at one snapshot, starting the search from
/// `start`. Objects without signal energy get an uninformative message.
pub fn project_data_message(
    ctx: &MeasurementContext<'_>,
    jets: &[PositionJet],
    marginals: &[(C64, f64)],
    xi: &[f64],
    k: usize,
    start: [f64; 2],
    options: &ProjectionOptions,
) -> Result<Projection> {
    let likelihood = RadarLikelihood::new(ctx, jets, marginals, xi, k)?;
    if !likelihood.is_informative() {
        return Ok(Projection::uninformative(start));
    }
    minimize_kl(&likelihood, start, options)
}
