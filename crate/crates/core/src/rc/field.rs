//! Edge occupation probabilities of the long-range random-cluster model.

use crate::error::{Error, Result};
use crate::potential::zeta_tail;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeRule {
    /// `1 - exp(-beta / |i - j|^alpha)` on sites of `Z`.
    Rho,
    /// Probability that the folded edge `{i, j}` of `Z+` is hit by some
    /// preimage edge of a two-sided `Rho` graph. For `i, j >= 1` this is
    /// `1 - exp(-beta (2|i-j|^-alpha + 2|i+j|^-alpha))`; at `i = 0` only the
    /// two preimages `{0, +-j}` exist and the exponent is `2 beta j^-alpha`.
    Gamma,
    /// `p / (p + (1 - p) q)` applied to the `Rho` probability.
    BernoulliReduced { q: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeProbabilityField {
    pub alpha: f64,
    pub beta: f64,
    pub rule: EdgeRule,
}

/// `1 - exp(-x)` without cancellation.
#[inline]
pub fn one_minus_exp_neg(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// `p / (p + (1 - p) q)`.
#[inline]
pub fn reduced_probability(p: f64, q: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p / (p + (1.0 - p) * q)
    }
}

impl EdgeProbabilityField {
    pub fn new(alpha: f64, beta: f64, rule: EdgeRule) -> Result<Self> {
        if !(alpha > 1.0) || !alpha.is_finite() {
            return Err(Error::arg(format!("alpha must be finite and > 1, got {alpha}")));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::arg(format!("beta must be finite and >= 0, got {beta}")));
        }
        if let EdgeRule::BernoulliReduced { q } = rule {
            if !(q >= 1.0) || !q.is_finite() {
                return Err(Error::arg(format!("cluster weight q must be >= 1, got {q}")));
            }
        }
        Ok(EdgeProbabilityField { alpha, beta, rule })
    }

    pub fn rho(alpha: f64, beta: f64) -> Result<Self> {
        EdgeProbabilityField::new(alpha, beta, EdgeRule::Rho)
    }

    pub fn gamma(alpha: f64, beta: f64) -> Result<Self> {
        EdgeProbabilityField::new(alpha, beta, EdgeRule::Gamma)
    }

    pub fn reduced(alpha: f64, beta: f64, q: f64) -> Result<Self> {
        EdgeProbabilityField::new(alpha, beta, EdgeRule::BernoulliReduced { q })
    }

    fn rho_at(&self, d: u64) -> f64 {
        one_minus_exp_neg(self.beta * (d as f64).powf(-self.alpha))
    }

    /// Occupation probability of the edge between sites `i` and `j`.
    pub fn prob(&self, i: i64, j: i64) -> Result<f64> {
        if i == j {
            return Err(Error::arg(format!("loop at site {i}: loops are excluded")));
        }
        let d = i.abs_diff(j);
        Ok(match self.rule {
            EdgeRule::Rho => self.rho_at(d),
            EdgeRule::Gamma => {
                if i < 0 || j < 0 {
                    return Err(Error::arg("the folded field lives on non-negative sites"));
                }
                let a = self.alpha;
                let s = (i + j) as f64;
                let exponent = if i == 0 || j == 0 {
                    2.0 * (d as f64).powf(-a)
                } else {
                    2.0 * (d as f64).powf(-a) + 2.0 * s.powf(-a)
                };
                one_minus_exp_neg(self.beta * exponent)
            }
            EdgeRule::BernoulliReduced { q } => reduced_probability(self.rho_at(d), q),
        })
    }

    /// Probability that site `i` of the window `[origin, origin + n)` has at
    /// least one `Rho` edge to a site in `[origin + n, inf)`.
    pub fn right_boundary_prob(&self, i: i64, window_end: i64) -> f64 {
        one_minus_exp_neg(self.beta * zeta_tail((window_end - i) as u64, self.alpha))
    }
}
