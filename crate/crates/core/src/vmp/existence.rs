use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn sigmoid(l: f64) -> f64 {
    if l >= 0.0 {
        1.0 / (1.0 + (-l).exp())
    } else {
        let e = l.exp();
        e / (1.0 + e)
    }
}

/// Entropy of a Bernoulli variable with mean `p` [nats]; zero at the ends.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// Mean of the Bernoulli existence proxy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExistenceBelief {
    pub prob: f64,
}

impl ExistenceBelief {
    pub fn new(prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&prob) {
            return Err(Error::Domain(format!("existence probability {prob} outside [0, 1]")));
        }
        Ok(Self { prob })
    }
}

/// Birth-death transition of the existence indicator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExistencePrior {
    pub p_survive: f64,
    pub p_birth: f64,
}

impl Default for ExistencePrior {
    fn default() -> Self {
        Self { p_survive: 0.95, p_birth: 1e-8 }
    }
}

impl ExistencePrior {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_survive", self.p_survive), ("p_birth", self.p_birth)] {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {p}")));
            }
        }
        Ok(())
    }

    /// Linear coefficient of the current existence mean in the ELBO given the
    /// previous step's mean: `xi_prev (logit p_s - logit p_b) + logit p_b`.
    pub fn g(&self, prev: f64) -> f64 {
        let (ls, lb) = (logit(self.p_survive), logit(self.p_birth));
        prev * (ls - lb) + lb
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_at_the_ends() {
        let p = ExistencePrior::default();
        assert!((p.g(0.0) + 18.420_680_733).abs() < 1e-6);
        assert!((p.g(1.0) - 2.944_438_979).abs() < 1e-6);
    }

    #[test]
    fn entropy_and_sigmoid() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - std::f64::consts::LN_2).abs() < 1e-15);
        for l in [-30.0, -3.0, 0.0, 2.5, 15.0] {
            assert!((logit(sigmoid(l)) - l).abs() < 1e-6 * l.abs().max(1.0));
        }
        assert!(ExistenceBelief::new(1.2).is_err());
    }
}
