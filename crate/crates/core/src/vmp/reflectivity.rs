use nalgebra::{DMatrix, DVector};

use crate::vmp::{binary_entropy, sigmoid, GaussianBelief, MeasurementContext};
use crate::{Error, Result, C64};

/// Joint complex-Gaussian reflectivity proxy `CN(mean, precision^-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectivityBelief {
    pub mean: DVector<C64>,
    pub precision: DMatrix<C64>,
}

impl ReflectivityBelief {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn covariance(&self) -> Result<DMatrix<C64>> {
        Ok(cholesky(&self.precision)?.inverse())
    }

    /// Per-object `(mean, variance)` marginals.
    pub fn marginals(&self) -> Result<Vec<(C64, f64)>> {
        let cov = self.covariance()?;
        Ok((0..self.len()).map(|k| (self.mean[k], cov[(k, k)].re)).collect())
    }
}

/// Sufficient statistics of one snapshot for the joint reflectivity and
/// existence update of `K` potential objects.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectivityModel {
    /// Expected `<S_k|Lambda|S_j>`.
    pub gram: DMatrix<C64>,
    /// `<S_k|Lambda|Z>`.
    pub projection: DVector<C64>,
    /// Prior precision of every reflectivity.
    pub prior_precision: f64,
    /// Linear existence coefficient `g(xi_{k,n-1})` of each object.
    pub g: Vec<f64>,
}

impl ReflectivityModel {
    /// Evaluates the statistics at the state beliefs (delta method).
    pub fn from_beliefs(
        ctx: &MeasurementContext<'_>,
        beliefs: &[GaussianBelief],
        g: Vec<f64>,
        prior_precision: f64,
    ) -> Result<Self> {
        if g.len() != beliefs.len() {
            return Err(Error::Dimension { expected: beliefs.len(), got: g.len() });
        }
        let jets = ctx.jets(beliefs)?;
        let projection = DVector::from_iterator(jets.len(), jets.iter().map(|j| ctx.projection(j)));
        Self::new(ctx.expected_gram(&jets, beliefs), projection, g, prior_precision)
    }

    pub fn new(
        gram: DMatrix<C64>,
        projection: DVector<C64>,
        g: Vec<f64>,
        prior_precision: f64,
    ) -> Result<Self> {
        let k = projection.len();
        if gram.nrows() != k || gram.ncols() != k {
            return Err(Error::Dimension { expected: k, got: gram.nrows() });
        }
        if g.len() != k {
            return Err(Error::Dimension { expected: k, got: g.len() });
        }
        if !(prior_precision > 0.0 && prior_precision.is_finite()) {
            return Err(Error::Config(format!(
                "reflectivity prior precision must be positive, got {prior_precision}"
            )));
        }
        Ok(Self { gram, projection, prior_precision, g })
    }

    pub fn len(&self) -> usize {
        self.projection.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projection.is_empty()
    }

    /// `M(xi) .* E + lambda_p I`.
    pub fn precision_matrix(&self, xi: &[f64]) -> DMatrix<C64> {
        let k = self.len();
        DMatrix::from_fn(k, k, |i, j| {
            let m = if i == j { xi[i] } else { xi[i] * xi[j] };
            let mut v = self.gram[(i, j)] * m;
            if i == j {
                v = C64::new(v.re + self.prior_precision, 0.0);
            }
            v
        })
    }

    /// `diag(xi) <S|Lambda|Z>`.
    pub fn rhs(&self, xi: &[f64]) -> DVector<C64> {
        DVector::from_iterator(self.len(), (0..self.len()).map(|k| self.projection[k] * xi[k]))
    }

    /// Optimal reflectivity proxy for fixed existence means.
    pub fn posterior(&self, xi: &[f64]) -> Result<ReflectivityBelief> {
        self.check(xi)?;
        let precision = self.precision_matrix(xi);
        let mean = cholesky(&precision)?.solve(&self.rhs(xi));
        Ok(ReflectivityBelief { mean, precision })
    }

    /// `b^H Lambda^-1 b - ln|Lambda| + K ln lambda_p`: the log normalizer of
    /// the reflectivity posterior, zero when every object is switched off.
    pub fn log_evidence(&self, xi: &[f64]) -> Result<f64> {
        self.check(xi)?;
        let precision = self.precision_matrix(xi);
        let chol = cholesky(&precision)?;
        let b = self.rhs(xi);
        let quad = b.dotc(&chol.solve(&b)).re;
        Ok(quad - log_det(&chol) + self.len() as f64 * self.prior_precision.ln())
    }

    /// Evidence lower bound of the joint update, up to a constant:
    /// `ln G(xi) + sum_k [H(xi_k) + xi_k g_k] - KL(q || t(xi))`.
    pub fn elbo(&self, xi: &[f64], q: &ReflectivityBelief) -> Result<f64> {
        if self.is_empty() {
            return Ok(0.0);
        }
        let target = self.posterior(xi)?;
        let existence: f64 = xi
            .iter()
            .zip(&self.g)
            .map(|(x, g)| binary_entropy(*x) + x * g)
            .sum();
        Ok(self.log_evidence(xi)? + existence - complex_gaussian_kl(q, &target)?)
    }

    /// Objective of the existence mean of object `k` with all others fixed.
    pub fn xi_objective(&self, k: usize, xi: &[f64]) -> Result<XiObjective> {
        self.check(xi)?;
        let rest: Vec<usize> = (0..self.len()).filter(|&j| j != k).collect();
        let (r, w) = if rest.is_empty() {
            (0.0, C64::new(0.0, 0.0))
        } else {
            let full = self.precision_matrix(xi);
            let a = full.select_rows(&rest).select_columns(&rest);
            let c0 = DVector::from_iterator(rest.len(), rest.iter().map(|&j| self.gram[(j, k)] * xi[j]));
            let b = DVector::from_iterator(rest.len(), rest.iter().map(|&j| self.projection[j] * xi[j]));
            let u = cholesky(&a)?.solve(&c0);
            (u.dotc(&c0).re, u.dotc(&b))
        };
        Ok(XiObjective {
            q: (self.projection[k] - w).norm_sqr(),
            e: self.gram[(k, k)].re,
            r,
            prior_precision: self.prior_precision,
            g: self.g[k],
        })
    }

    /// One coordinate sweep of existence updates in index order. Each object's
    /// mean moves to the maximizer of its objective unless that would lower
    /// the ELBO. Returns the reflectivity proxy matching the new means.
    ///
    /// The inverse precision is carried along with block updates so a sweep
    /// costs `O(K^3)`.
    pub fn update_xi_sweep(&self, xi: &mut [f64]) -> Result<ReflectivityBelief> {
        self.check(xi)?;
        let k_total = self.len();
        if k_total == 0 {
            return self.posterior(xi);
        }
        let mut inv = cholesky(&self.precision_matrix(xi))?.inverse();
        let mut b = self.rhs(xi);
        for k in 0..k_total {
            // inverse of the block without k, padded with a zero row/column
            let bkk = inv[(k, k)].re;
            let col = inv.column(k).into_owned();
            let mut ainv = &inv - &col * col.adjoint() / C64::new(bkk, 0.0);
            ainv.row_mut(k).fill(C64::new(0.0, 0.0));
            ainv.column_mut(k).fill(C64::new(0.0, 0.0));

            let mut c0 = DVector::from_iterator(k_total, (0..k_total).map(|j| self.gram[(j, k)] * xi[j]));
            c0[k] = C64::new(0.0, 0.0);
            let u = &ainv * &c0;
            let r = u.dotc(&c0).re;
            b[k] = C64::new(0.0, 0.0);
            let w = u.dotc(&b);
            let objective = XiObjective {
                q: (self.projection[k] - w).norm_sqr(),
                e: self.gram[(k, k)].re,
                r,
                prior_precision: self.prior_precision,
                g: self.g[k],
            };
            let candidate = objective.argmax();
            let x = if objective.value(candidate) >= objective.value(xi[k]) {
                candidate
            } else {
                xi[k]
            };
            xi[k] = x;
            b[k] = self.projection[k] * x;

            let s = objective.schur(x);
            let v = &u * C64::new(x, 0.0);
            let mut next = ainv + &v * v.adjoint() / C64::new(s, 0.0);
            for j in 0..k_total {
                next[(j, k)] = -v[j] / s;
                next[(k, j)] = -v[j].conj() / s;
            }
            next[(k, k)] = C64::new(1.0 / s, 0.0);
            inv = next;
        }
        self.posterior(xi)
    }

    fn check(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.len() {
            return Err(Error::Dimension { expected: self.len(), got: xi.len() });
        }
        if let Some(x) = xi.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Domain(format!("existence mean {x} outside [0, 1]")));
        }
        Ok(())
    }
}

/// The existence objective of one object as a function of its mean `x`
/// (all other objects fixed), via the Schur complement of the precision:
///
/// ```text
/// f(x) = x^2 q / s(x) - ln s(x) + H(x) + x g,   s(x) = lambda_p + x e - x^2 r
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiObjective {
    /// `|<S_k|Lambda|Z> - c0^H A^-1 b_rest|^2`.
    pub q: f64,
    /// Expected self energy `E_kk`.
    pub e: f64,
    /// `c0^H A^-1 c0`, the part of `S_k` explained by the other objects.
    pub r: f64,
    pub prior_precision: f64,
    pub g: f64,
}

impl XiObjective {
    fn schur(&self, x: f64) -> f64 {
        self.prior_precision + x * self.e - x * x * self.r
    }

    pub fn value(&self, x: f64) -> f64 {
        let s = self.schur(x);
        x * x * self.q / s - s.ln() + binary_entropy(x) + x * self.g
    }

    fn value_logit(&self, l: f64) -> f64 {
        // entropy from the logit keeps full precision near 0 and 1
        let x = sigmoid(l);
        let log_x = -softplus(-l);
        let log_1mx = -softplus(l);
        let h = -x * log_x - (1.0 - x) * log_1mx;
        let s = self.schur(x);
        x * x * self.q / s - s.ln() + h + x * self.g
    }

    /// Maximizer over `[0, 1]`: a coarse scan in logit space followed by
    /// golden-section refinement, so means as extreme as `1 - 1e-8` are
    /// resolved.
    pub fn argmax(&self) -> f64 {
        const LIMIT: f64 = 40.0;
        const STEPS: usize = 160;
        let h = 2.0 * LIMIT / STEPS as f64;
        let (mut best_l, mut best_v) = (-LIMIT, f64::NEG_INFINITY);
        for i in 0..=STEPS {
            let l = -LIMIT + i as f64 * h;
            let v = self.value_logit(l);
            if v > best_v {
                best_v = v;
                best_l = l;
            }
        }
        let (mut a, mut b) = ((best_l - h).max(-LIMIT), (best_l + h).min(LIMIT));
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let (mut fc, mut fd) = (self.value_logit(c), self.value_logit(d));
        while b - a > 1e-9 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = self.value_logit(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = self.value_logit(d);
            }
        }
        let l = 0.5 * (a + b);
        let mut x = sigmoid(l);
        for end in [0.0, 1.0] {
            if self.value(end) > self.value(x) {
                x = end;
            }
        }
        x
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Reflectivity proxy `CN(mu_alpha, Lambda_alpha^-1)` for the current state
/// beliefs and existence means.
pub fn update_alpha(model: &ReflectivityModel, xi: &[f64]) -> Result<ReflectivityBelief> {
    model.posterior(xi)
}

/// New existence mean of object `k` with everything else fixed.
pub fn update_xi(model: &ReflectivityModel, k: usize, xi: &[f64]) -> Result<f64> {
    if k >= model.len() {
        return Err(Error::Dimension { expected: model.len(), got: k });
    }
    let objective = model.xi_objective(k, xi)?;
    let candidate = objective.argmax();
    Ok(if objective.value(candidate) >= objective.value(xi[k]) { candidate } else { xi[k] })
}

/// ELBO of the joint update for a given reflectivity proxy; 0 for `K = 0`.
pub fn compute_elbo(model: &ReflectivityModel, xi: &[f64], q: &ReflectivityBelief) -> Result<f64> {
    model.elbo(xi, q)
}

fn cholesky(m: &DMatrix<C64>) -> Result<nalgebra::Cholesky<C64, nalgebra::Dyn>> {
    m.clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("reflectivity precision not positive definite".into()))
}

fn log_det(chol: &nalgebra::Cholesky<C64, nalgebra::Dyn>) -> f64 {
    chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.re.ln()).sum()
}

/// `KL(CN(mu_q, Lq^-1) || CN(mu_t, Lt^-1))` for complex Gaussians.
fn complex_gaussian_kl(q: &ReflectivityBelief, t: &ReflectivityBelief) -> Result<f64> {
    if q.len() != t.len() {
        return Err(Error::Dimension { expected: t.len(), got: q.len() });
    }
    let cq = cholesky(&q.precision)?;
    let ct = cholesky(&t.precision)?;
    let trace = (&t.precision * cq.inverse()).trace().re;
    let d = &q.mean - &t.mean;
    let maha = d.dotc(&(&t.precision * &d)).re;
    Ok(trace - q.len() as f64 + maha + log_det(&cq) - log_det(&ct))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radar_sim::{ObjectReturn, RadarConfig, Scenario, Simulator};
    use crate::vmp::ExistencePrior;
    use nalgebra::{Matrix4, Vector4};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn point(x: f64, y: f64) -> GaussianBelief {
        GaussianBelief::new(
            Vector4::new(x, y, 0.0, 0.0),
            Matrix4::from_diagonal(&Vector4::new(1e-4, 1e-4, 1.0, 1.0)),
        )
        .unwrap()
    }

    /// Random Hermitian PSD gram, projections and coefficients.
    fn random_model(rng: &mut ChaCha8Rng, k: usize) -> ReflectivityModel {
        let f = DMatrix::from_fn(k + 2, k, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let gram = f.adjoint() * &f * C64::new(rng.random_range(0.5..20.0), 0.0);
        let projection = DVector::from_fn(k, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * rng.random_range(0.0..8.0)
        });
        let g = (0..k).map(|_| rng.random_range(-20.0..4.0)).collect();
        ReflectivityModel::new(gram, projection, g, rng.random_range(0.05..2.0)).unwrap()
    }

    #[test]
    fn switched_off_objects_give_the_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_model(&mut rng, 3);
        let q = m.posterior(&[0.0; 3]).unwrap();
        assert!(q.mean.iter().all(|v| v.norm() == 0.0));
        let expected = DMatrix::<C64>::identity(3, 3) * C64::new(m.prior_precision, 0.0);
        assert!((q.precision - expected).norm() < 1e-15);
        assert!(m.log_evidence(&[0.0; 3]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn single_object_is_weighted_least_squares() {
        let sim = Simulator::new(&RadarConfig::default()).unwrap();
        let obj = ObjectReturn { position: [-6.0, 28.0], rcs: 0.05 };
        let snap = sim.snapshot(1, &[obj], None).unwrap();
        let ctx = MeasurementContext::new(sim.model(), &snap).unwrap();
        let exact = GaussianBelief::new(
            Vector4::new(-6.0, 28.0, 0.0, 0.0),
            Matrix4::from_diagonal(&Vector4::new(1e-30, 1e-30, 1.0, 1.0)),
        )
        .unwrap();
        let m = ReflectivityModel::from_beliefs(&ctx, &[exact], vec![0.0], 1e-30).unwrap();
        let q = update_alpha(&m, &[1.0]).unwrap();
        let jet = sim.model().jet([-6.0, 28.0]).unwrap();
        let s = sim.model().steering_at(&jet);
        let num = crate::steering::weighted_inner(&s, &snap.noise_precision, &snap.data);
        let den = crate::steering::weighted_inner(&s, &snap.noise_precision, &s).re;
        let wls = num / den;
        assert!((q.mean[0] - wls).norm() < 1e-9 * wls.norm());
        assert!((q.mean[0] - sim.amplitude(&obj).unwrap()).norm() < 1e-6 * wls.norm());
    }

    #[test]
    fn crossing_objects_are_strongly_correlated() {
        let sc = Scenario::reference();
        let sim = Simulator::new(&sc.radar).unwrap();
        let (snap, _) = sim.simulate_step(&sc, 22, 0).unwrap();
        let ctx = MeasurementContext::new(sim.model(), &snap).unwrap();
        let beliefs: Vec<GaussianBelief> = sc
            .truth_at(22)
            .iter()
            .take(2)
            .map(|(_, s)| point(s[0], s[1]))
            .collect();
        let m = ReflectivityModel::from_beliefs(&ctx, &beliefs, vec![0.0; 2], 1.0).unwrap();
        let p = m.precision_matrix(&[1.0, 1.0]);
        assert!(p[(0, 1)].norm() > 0.5 * (p[(0, 0)].re * p[(1, 1)].re).sqrt());
    }

    #[test]
    fn orthogonal_data_switches_the_object_off() {
        let e = 1e4;
        let m = ReflectivityModel::new(
            DMatrix::from_element(1, 1, C64::new(e, 0.0)),
            DVector::from_element(1, C64::new(0.0, 0.0)),
            vec![ExistencePrior::default().g(0.0)],
            1e-2,
        )
        .unwrap();
        assert!(update_xi(&m, 0, &[0.5]).unwrap() < 1e-6);
        let obj = m.xi_objective(0, &[0.5]).unwrap();
        let grid_best = (0..=10_000)
            .map(|i| i as f64 / 10_000.0)
            .max_by(|a, b| obj.value(*a).total_cmp(&obj.value(*b)))
            .unwrap();
        assert!(grid_best < 1e-6);
    }

    #[test]
    fn optimizer_matches_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let grid: Vec<f64> = (0..=10_000).map(|i| i as f64 * 1e-4).collect();
        for _ in 0..100 {
            let k = rng.random_range(1..5);
            let m = random_model(&mut rng, k);
            let xi: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
            let target = rng.random_range(0..k);
            let obj = m.xi_objective(target, &xi).unwrap();
            let x = update_xi(&m, target, &xi).unwrap();
            let best = grid
                .iter()
                .copied()
                .max_by(|a, b| obj.value(*a).total_cmp(&obj.value(*b)))
                .unwrap();
            assert!(obj.value(x) >= obj.value(best) - 1e-9);
            assert!((x - best).abs() < 1e-3, "optimizer {x} vs grid {best}");
        }
    }

    #[test]
    fn sweep_matches_direct_updates() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let k = rng.random_range(1..7);
            let m = random_model(&mut rng, k);
            let start: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
            let mut direct = start.clone();
            for j in 0..k {
                direct[j] = update_xi(&m, j, &direct).unwrap();
            }
            let mut swept = start;
            m.update_xi_sweep(&mut swept).unwrap();
            for j in 0..k {
                assert!((direct[j] - swept[j]).abs() < 1e-6, "{direct:?} vs {swept:?}");
            }
        }
    }

    #[test]
    fn inactive_duplicate_leaves_elbo_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = random_model(&mut rng, 2);
        let xi = [0.7, 0.4];
        let q = m.posterior(&xi).unwrap();
        let base = m.elbo(&xi, &q).unwrap();

        let mut gram = DMatrix::zeros(3, 3);
        gram.view_mut((0, 0), (2, 2)).copy_from(&m.gram);
        for j in 0..2 {
            gram[(2, j)] = m.gram[(0, j)];
            gram[(j, 2)] = m.gram[(j, 0)];
        }
        gram[(2, 2)] = m.gram[(0, 0)];
        let proj = DVector::from_vec(vec![m.projection[0], m.projection[1], m.projection[0]]);
        let dup = ReflectivityModel::new(gram, proj, vec![m.g[0], m.g[1], m.g[0]], m.prior_precision).unwrap();
        let xi3 = [0.7, 0.4, 0.0];
        let q3 = dup.posterior(&xi3).unwrap();
        assert!((dup.elbo(&xi3, &q3).unwrap() - base).abs() < 1e-9);
        let empty = ReflectivityModel::new(DMatrix::zeros(0, 0), DVector::zeros(0), vec![], 1.0).unwrap();
        assert_eq!(compute_elbo(&empty, &[], &empty.posterior(&[]).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn rescaling_data_and_noise_leaves_xi_unchanged() {
        let sim = Simulator::new(&RadarConfig::default()).unwrap();
        let mut rng = crate::radar_sim::stream_rng(2, 1, 0xFFFF);
        let obj = ObjectReturn { position: [20.0, 60.0], rcs: 0.01 };
        let snap = sim.snapshot(1, &[obj], Some(&mut rng)).unwrap();
        let gamma: f64 = 37.0;
        let mut scaled = snap.clone();
        scaled.data.iter_mut().for_each(|z| *z *= gamma);
        scaled.noise_precision = snap.noise_precision.iter().map(|w| w / (gamma * gamma)).collect();
        let prior = ExistencePrior::default();
        let run = |s: &crate::radar_sim::Snapshot, lambda: f64| {
            let ctx = MeasurementContext::new(sim.model(), s).unwrap();
            let m = ReflectivityModel::from_beliefs(
                &ctx,
                &[point(20.0, 60.0), point(-30.0, 40.0)],
                vec![prior.g(1.0), prior.g(0.0)],
                lambda,
            )
            .unwrap();
            let mut xi = vec![0.5, 0.5];
            m.update_xi_sweep(&mut xi).unwrap();
            xi
        };
        let lambda = 1e9;
        let a = run(&snap, lambda);
        let b = run(&scaled, lambda / (gamma * gamma));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-6, "{a:?} vs {b:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn joint_update_never_lowers_elbo(seed in any::<u64>(), k in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_model(&mut rng, k);
            let mut xi: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
            // arbitrary starting proxy
            let q0 = ReflectivityBelief {
                mean: DVector::from_fn(k, |_, _| C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))),
                precision: m.precision_matrix(&xi) * C64::new(rng.random_range(0.5..3.0), 0.0),
            };
            let before = m.elbo(&xi, &q0).unwrap();
            let q1 = update_alpha(&m, &xi).unwrap();
            let after_alpha = m.elbo(&xi, &q1).unwrap();
            prop_assert!(after_alpha >= before - 1e-9);
            let q2 = m.update_xi_sweep(&mut xi).unwrap();
            let after_xi = m.elbo(&xi, &q2).unwrap();
            prop_assert!(after_xi >= after_alpha - 1e-9, "{} < {}", after_xi, after_alpha);
        }
    }
}
