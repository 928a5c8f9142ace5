//! Multi-object evaluation: OSPA, cardinality statistics, error CDFs.

use serde::{Deserialize, Serialize};

use crate::assignment;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OspaConfig {
    pub cutoff: f64,
    pub order: f64,
}

impl Default for OspaConfig {
    fn default() -> Self {
        Self { cutoff: 10.0, order: 2.0 }
    }
}

impl OspaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return Err(Error::Config(format!("OSPA cutoff must be positive, got {}", self.cutoff)));
        }
        if !(self.order >= 1.0 && self.order.is_finite()) {
            return Err(Error::Config(format!("OSPA order must be >= 1, got {}", self.order)));
        }
        Ok(())
    }
}

/// OSPA distance with its optimal matching.
#[derive(Debug, Clone, PartialEq)]
pub struct OspaResult {
    pub distance: f64,
    /// `(truth index, estimate index, Euclidean distance)`.
    pub pairs: Vec<(usize, usize, f64)>,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// OSPA of order `p` with cutoff `c` between two position sets, and the
/// matching achieving it. Two empty sets are at distance 0.
pub fn ospa_matching(truth: &[[f64; 2]], estimate: &[[f64; 2]], cfg: &OspaConfig) -> Result<OspaResult> {
    cfg.validate()?;
    if truth.iter().chain(estimate).flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite position in OSPA input".into()));
    }
    let (m, n) = (truth.len(), estimate.len());
    let big = m.max(n);
    if big == 0 {
        return Ok(OspaResult { distance: 0.0, pairs: Vec::new() });
    }
    let (c, p) = (cfg.cutoff, cfg.order);
    let cost: Vec<f64> = truth
        .iter()
        .flat_map(|t| estimate.iter().map(move |e| dist(*t, *e).min(c).powf(p)))
        .collect();
    let a = assignment::solve(&cost, m, n)?;
    let pairs: Vec<(usize, usize, f64)> =
        a.pairs().map(|(i, j)| (i, j, dist(truth[i], estimate[j]))).collect();
    let total = a.cost + c.powf(p) * (big - m.min(n)) as f64;
    Ok(OspaResult { distance: (total / big as f64).powf(1.0 / p), pairs })
}

pub fn ospa(truth: &[[f64; 2]], estimate: &[[f64; 2]], cfg: &OspaConfig) -> Result<f64> {
    Ok(ospa_matching(truth, estimate, cfg)?.distance)
}

/// Position errors of OSPA-matched pairs closer than the cutoff; farther
/// pairs count as unmatched.
pub fn matched_errors(truth: &[[f64; 2]], estimate: &[[f64; 2]], cfg: &OspaConfig) -> Result<Vec<f64>> {
    Ok(ospa_matching(truth, estimate, cfg)?
        .pairs
        .into_iter()
        .map(|(_, _, d)| d)
        .filter(|d| *d < cfg.cutoff)
        .collect())
}

/// Per-step mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub mean: f64,
    pub std: f64,
}

/// Mean and sample standard deviation at every step over runs. A single run
/// has zero spread.
pub fn per_step_stats(runs: &[Vec<f64>]) -> Result<Vec<StepStats>> {
    let first = runs.first().ok_or(Error::Empty("no runs"))?;
    let len = first.len();
    if let Some(bad) = runs.iter().find(|r| r.len() != len) {
        return Err(Error::Dimension { expected: len, got: bad.len() });
    }
    let k = runs.len() as f64;
    Ok((0..len)
        .map(|s| {
            let mean = runs.iter().map(|r| r[s]).sum::<f64>() / k;
            let ss: f64 = runs.iter().map(|r| (r[s] - mean).powi(2)).sum();
            let std = if runs.len() > 1 { (ss / (k - 1.0)).sqrt() } else { 0.0 };
            StepStats { mean, std }
        })
        .collect())
}

pub fn cardinality_stats(runs: &[Vec<usize>]) -> Result<Vec<StepStats>> {
    let as_f64: Vec<Vec<f64>> = runs.iter().map(|r| r.iter().map(|&c| c as f64).collect()).collect();
    per_step_stats(&as_f64)
}

/// Empirical distribution of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("no samples for the CDF"));
        }
        if samples.iter().any(|v| v.is_nan()) {
            return Err(Error::Numerical("NaN sample".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples `<= x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|v| *v <= x) as f64 / self.len() as f64
    }

    /// Smallest sample `x` with `cdf(x) >= p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let k = ((p * self.len() as f64).ceil() as usize).max(1);
        self.sorted[k - 1]
    }

    /// `(value, cdf)` at every distinct sample.
    pub fn table(&self) -> Vec<(f64, f64)> {
        let n = self.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, v) in self.sorted.iter().enumerate() {
            let p = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == *v => last.1 = p,
                _ => out.push((*v, p)),
            }
        }
        out
    }
}

pub fn rmse_cdf(errors: Vec<f64>) -> Result<EmpiricalCdf> {
    EmpiricalCdf::new(errors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_ospa(x: &[[f64; 2]], y: &[[f64; 2]], cfg: &OspaConfig) -> f64 {
        let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
        let n = large.len();
        if n == 0 {
            return 0.0;
        }
        fn best(small: &[[f64; 2]], large: &[[f64; 2]], i: usize, used: &mut Vec<bool>, cfg: &OspaConfig) -> f64 {
            if i == small.len() {
                return 0.0;
            }
            let mut b = f64::INFINITY;
            for j in 0..large.len() {
                if !used[j] {
                    used[j] = true;
                    let d = dist(small[i], large[j]).min(cfg.cutoff).powf(cfg.order);
                    b = b.min(d + best(small, large, i + 1, used, cfg));
                    used[j] = false;
                }
            }
            b
        }
        let loc = best(small, large, 0, &mut vec![false; n], cfg);
        ((loc + cfg.cutoff.powf(cfg.order) * (n - small.len()) as f64) / n as f64).powf(1.0 / cfg.order)
    }

    fn set(max: usize) -> impl Strategy<Value = Vec<[f64; 2]>> {
        proptest::collection::vec(prop::array::uniform2(-30.0f64..30.0), 0..=max)
    }

    #[test]
    fn trivial_cases() {
        let cfg = OspaConfig::default();
        let a = [[1.0, 2.0], [5.0, -3.0]];
        assert_eq!(ospa(&a, &a, &cfg).unwrap(), 0.0);
        assert_eq!(ospa(&[[0.0, 1.0]], &[], &cfg).unwrap(), 10.0);
        assert_eq!(ospa(&[], &[], &cfg).unwrap(), 0.0);
        assert!(ospa(&[[f64::NAN, 0.0]], &[], &cfg).is_err());
        assert!(OspaConfig { cutoff: 1.0, order: 0.5 }.validate().is_err());
    }

    #[test]
    fn cardinality_statistics() {
        let s = cardinality_stats(&[vec![2, 3], vec![3, 3]]).unwrap();
        assert_eq!(s[0].mean, 2.5);
        assert!((s[0].std - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(s[1], StepStats { mean: 3.0, std: 0.0 });
        assert!(cardinality_stats(&[]).is_err());
        assert!(cardinality_stats(&[vec![1], vec![1, 2]]).is_err());
        let swapped = cardinality_stats(&[vec![3, 3], vec![2, 3]]).unwrap();
        assert_eq!(s, swapped);
    }

    #[test]
    fn constant_error_cdf_is_a_step() {
        let c = rmse_cdf(vec![0.7; 10]).unwrap();
        assert_eq!(c.cdf(0.6999), 0.0);
        assert_eq!(c.cdf(0.7), 1.0);
        assert_eq!(c.quantile(0.9), 0.7);
        assert_eq!(c.table(), vec![(0.7, 1.0)]);
        assert!(rmse_cdf(vec![]).is_err());
    }

    #[test]
    fn matched_errors_skip_far_pairs() {
        let cfg = OspaConfig::default();
        let e = matched_errors(&[[0.0, 10.0], [0.0, 50.0]], &[[0.3, 10.4], [20.0, 50.0]], &cfg).unwrap();
        assert_eq!(e.len(), 1);
        assert!((e[0] - 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn matches_permutation_oracle(x in set(4), y in set(4), p in 1.0f64..3.0, c in 1.0f64..20.0) {
            let cfg = OspaConfig { cutoff: c, order: p };
            let d = ospa(&x, &y, &cfg).unwrap();
            prop_assert!((d - brute_ospa(&x, &y, &cfg)).abs() < 1e-9);
            prop_assert!((d - ospa(&y, &x, &cfg).unwrap()).abs() < 1e-9);
            prop_assert!(d <= c + 1e-12);
        }

        #[test]
        fn triangle_inequality(x in set(4), y in set(4), z in set(4)) {
            let cfg = OspaConfig::default();
            let xy = ospa(&x, &y, &cfg).unwrap();
            let yz = ospa(&y, &z, &cfg).unwrap();
            let xz = ospa(&x, &z, &cfg).unwrap();
            prop_assert!(xz <= xy + yz + 1e-9);
        }

        #[test]
        fn extra_far_estimates_never_help(x in set(3), extra in 1usize..3) {
            let cfg = OspaConfig::default();
            let base = ospa(&x, &x, &cfg).unwrap();
            let mut y = x.clone();
            y.extend((0..extra).map(|i| [1e3 + i as f64, 1e3]));
            prop_assert!(ospa(&x, &y, &cfg).unwrap() >= base);
        }

        #[test]
        fn cdf_is_monotone_and_right_continuous(samples in proptest::collection::vec(0.0f64..5.0, 1..50)) {
            let c = rmse_cdf(samples.clone()).unwrap();
            let mut last = 0.0;
            for x in (0..=60).map(|i| i as f64 * 0.1) {
                let v = c.cdf(x);
                prop_assert!(v >= last);
                last = v;
            }
            for s in &samples {
                prop_assert!(c.cdf(*s) >= c.cdf(s - 1e-12));
                prop_assert!(c.cdf(*s) > 0.0);
            }
        }
    }
}
