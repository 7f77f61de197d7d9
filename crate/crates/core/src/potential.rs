//! The one-sided long-range Ising potential and its variations.
//!
//! The one-point potential at the origin is
//!
//! ```text
//! phi0(u) = K + beta * sum_{j>=1} u_0 u_j / j^alpha
//! ```
//!
//! and `q(u) = exp(phi0(u))`. Windows hold `u_0 .. u_{N-1}`; the tail
//! `u_N, u_{N+1}, ...` comes from a [`BoundaryCondition`].

use std::f64::consts::LN_2;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;
use crate::space::{Alphabet, BoundaryCondition, Sign};

/// Margin `eps` in `sup q = exp(-eps) / 2`.
pub const K_MARGIN: f64 = 1e-3;

/// Default cap on `|phi0|` before `exp` is refused.
pub const DEFAULT_EXP_CAP: f64 = 700.0;

/// Cut-over point for the Euler-Maclaurin remainder in [`zeta_tail`].
const EULER_MACLAURIN_CUTOFF: u64 = 64;

/// `sum_{j >= start} j^{-alpha}` for `start >= 1`, `alpha > 1`.
///
/// Terms below the cut-over are summed directly (smallest first); the rest
/// is the Euler-Maclaurin expansion through the `B_6` term, whose truncation
/// error is below `1e-17` for `alpha <= 2`.
pub fn zeta_tail(start: u64, alpha: f64) -> f64 {
    assert!(start >= 1, "zeta_tail needs start >= 1");
    assert!(alpha > 1.0, "zeta_tail needs alpha > 1");
    let m = start.max(EULER_MACLAURIN_CUTOFF);
    let mf = m as f64;
    let a = alpha;
    let p = mf.powf(-a);
    let remainder = mf.powf(1.0 - a) / (a - 1.0) + 0.5 * p + a / 12.0 * p / mf
        - a * (a + 1.0) * (a + 2.0) / 720.0 * p / mf.powi(3)
        + a * (a + 1.0) * (a + 2.0) * (a + 3.0) * (a + 4.0) / 30240.0 * p / mf.powi(5);
    let direct: f64 = (start..m).rev().map(|j| (j as f64).powf(-a)).sum();
    direct + remainder
}

/// `s * sum_{j >= start} j^{-alpha}` with `s = +1, -1, 0` for
/// plus/minus/free boundaries. Absolute error below `1e-12`.
pub fn tail_sum(bc: &BoundaryCondition, start: u64, alpha: f64) -> Result<f64> {
    if start < 1 {
        return Err(Error::arg("tail_sum needs start >= 1"));
    }
    if alpha <= 1.0 {
        return Err(Error::arg("tail_sum needs alpha > 1"));
    }
    match bc.constant_sign() {
        Some(0.0) => Ok(0.0),
        Some(s) => Ok(s * zeta_tail(start, alpha)),
        None => Err(Error::Unsupported("fixed boundaries are summed explicitly")),
    }
}

/// `[0, 1, 2^-a, 3^-a, ...]` up to `len` entries.
pub fn inverse_powers(len: usize, alpha: f64) -> Vec<f64> {
    (0..len)
        .map(|d| if d == 0 { 0.0 } else { (d as f64).powf(-alpha) })
        .collect()
}

/// Parameters of the long-range Ising potential.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub alpha: f64,
    pub beta: f64,
    /// Additive constant of the one-point potential.
    pub k: f64,
    /// Explicit tail sites summed for fixed boundaries.
    pub radius: usize,
}

impl PotentialSpec {
    pub fn new(alpha: f64, beta: f64, k: f64, radius: usize) -> Result<Self> {
        if !(alpha > 1.0) || !alpha.is_finite() {
            return Err(Error::arg(format!("alpha must be > 1, got {alpha}")));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::arg(format!("beta must be >= 0, got {beta}")));
        }
        if !k.is_finite() {
            return Err(Error::arg("K must be finite"));
        }
        if radius < 1 {
            return Err(Error::arg("truncation radius must be >= 1"));
        }
        Ok(PotentialSpec { alpha, beta, k, radius })
    }

    /// `K = 0`, radius 256.
    pub fn ising(alpha: f64, beta: f64) -> Result<Self> {
        PotentialSpec::new(alpha, beta, 0.0, 256)
    }

    /// Same parameters with `K = choose_k(beta, alpha)`.
    pub fn normalized(alpha: f64, beta: f64) -> Result<Self> {
        PotentialSpec::new(alpha, beta, choose_k(beta, alpha), 256)
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    /// `beta * |i - j|^-alpha`.
    pub fn coupling(&self, distance: usize) -> f64 {
        self.beta * (distance as f64).powf(-self.alpha)
    }

    /// `sum_{m} b_m / (start + m)^alpha` over the explicit boundary tail
    /// seen from a site at distance `start` from the first boundary site.
    pub fn boundary_sum(&self, bc: &BoundaryCondition, start: u64) -> f64 {
        match bc {
            BoundaryCondition::Fixed(tail) => tail
                .iter()
                .take(self.radius)
                .enumerate()
                .map(|(m, &t)| t as f64 * ((start + m as u64) as f64).powf(-self.alpha))
                .sum(),
            other => other.constant_sign().unwrap() * zeta_tail(start, self.alpha),
        }
    }
}

fn check_spins(u: &[i8]) -> Result<()> {
    if u.is_empty() {
        return Err(Error::arg("window must hold at least u_0"));
    }
    if u.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::arg("spins must be +1 or -1"));
    }
    Ok(())
}

/// `phi0` on the window `u` completed by `bc`.
pub fn phi0_eval(u: &[i8], spec: &PotentialSpec, bc: &BoundaryCondition) -> Result<f64> {
    check_spins(u)?;
    Ok(phi0_unchecked(u, spec, bc))
}

pub(crate) fn phi0_unchecked(u: &[i8], spec: &PotentialSpec, bc: &BoundaryCondition) -> f64 {
    if spec.beta == 0.0 {
        return spec.k;
    }
    let n = u.len();
    let inner: f64 = u[1..]
        .iter()
        .enumerate()
        .map(|(j, &s)| s as f64 * ((j + 1) as f64).powf(-spec.alpha))
        .sum();
    let tail = spec.boundary_sum(bc, n as u64);
    spec.k + spec.beta * u[0] as f64 * (inner + tail)
}

pub fn q_eval(u: &[i8], spec: &PotentialSpec, bc: &BoundaryCondition) -> Result<f64> {
    q_eval_capped(u, spec, bc, DEFAULT_EXP_CAP)
}

/// `exp(phi0)`, refusing when `|phi0| > cap`.
pub fn q_eval_capped(
    u: &[i8],
    spec: &PotentialSpec,
    bc: &BoundaryCondition,
    cap: f64,
) -> Result<f64> {
    let phi = phi0_eval(u, spec, bc)?;
    if phi.abs() > cap {
        return Err(Error::NumericRange { value: phi, cap });
    }
    Ok(phi.exp())
}

/// `K = -(ln 2 + beta * zeta(alpha) + eps)` so that `sup_u q(u) = exp(-eps)/2`.
pub fn choose_k(beta: f64, alpha: f64) -> f64 {
    -(LN_2 + beta * zeta_tail(1, alpha) + K_MARGIN)
}

/// Supremum of `q` over all configurations.
pub fn q_sup(spec: &PotentialSpec) -> f64 {
    (spec.k + spec.beta * zeta_tail(1, spec.alpha)).exp()
}

/// Exact value of `var_n log q = 2 beta sum_{j>=n} j^-alpha`, where `var_n`
/// compares configurations agreeing on `[0,n)`.
pub fn variation_bound(n: usize, spec: &PotentialSpec) -> Result<f64> {
    if n < 1 {
        return Err(Error::arg("variation depth must be >= 1"));
    }
    Ok(2.0 * spec.beta * zeta_tail(n as u64, spec.alpha))
}

/// Integral envelope `2 beta n^{1-alpha} / (alpha - 1)` (`2 beta / n` at
/// `alpha = 2`). It dominates `sum_{j>n} j^-alpha`, so it bounds
/// `var_{n+1} log q`, not `var_n log q`.
pub fn variation_envelope(n: usize, spec: &PotentialSpec) -> Result<f64> {
    if n < 1 {
        return Err(Error::arg("variation depth must be >= 1"));
    }
    let a = spec.alpha;
    Ok(2.0 * spec.beta * (n as f64).powf(1.0 - a) / (a - 1.0))
}

/// Randomized lower bound on `var_n f`: the largest `|f(x) - f(y)|` seen over
/// `trials` pairs of windows of length `n + extra` sharing `[0,n)`.
///
/// `f` receives a window and the sign of its constant tail completion. Pairs
/// are drawn with a per-trial bias that pushes `x` towards the top symbol
/// and `y` towards the bottom one, so extremal pairs are visited.
pub fn empirical_variation<F>(
    f: F,
    alphabet: &Alphabet,
    n: usize,
    extra: usize,
    trials: usize,
    seed: u64,
) -> f64
where
    F: Fn(&[i8], Sign) -> f64,
{
    let mut rng = rng_from_seed(seed);
    let syms = alphabet.symbols();
    let len = n + extra;
    let mut x = vec![0i8; len];
    let mut y = vec![0i8; len];
    let mut best = 0.0f64;
    for _ in 0..trials {
        let bias: f64 = rng.random();
        for i in 0..n {
            let s = syms[rng.random_range(0..syms.len())];
            x[i] = s;
            y[i] = s;
        }
        for i in n..len {
            x[i] = if rng.random::<f64>() < bias {
                alphabet.top()
            } else {
                syms[rng.random_range(0..syms.len())]
            };
            y[i] = if rng.random::<f64>() < bias {
                alphabet.bottom()
            } else {
                syms[rng.random_range(0..syms.len())]
            };
        }
        let sx = if rng.random::<f64>() < 0.5 + 0.5 * bias { Sign::Plus } else { Sign::Minus };
        let sy = if rng.random::<f64>() < 0.5 + 0.5 * bias { Sign::Minus } else { Sign::Plus };
        best = best.max((f(&x, sx) - f(&y, sy)).abs());
    }
    best
}

/// Non-negative variation sequence `r_1, r_2, ..., r_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationSequence {
    r: Vec<f64>,
}

impl VariationSequence {
    pub fn new(r: Vec<f64>) -> Result<Self> {
        if let Some(bad) = r.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::arg(format!("variations must be finite and >= 0, got {bad}")));
        }
        Ok(VariationSequence { r })
    }

    /// `r_k = f(k)` for `k = 1..=m`.
    pub fn from_fn(m: usize, f: impl Fn(usize) -> f64) -> Result<Self> {
        VariationSequence::new((1..=m).map(f).collect())
    }

    pub fn constant(c: f64, m: usize) -> Result<Self> {
        VariationSequence::from_fn(m, |_| c)
    }

    /// `r_k = c / k`.
    pub fn harmonic(c: f64, m: usize) -> Result<Self> {
        VariationSequence::from_fn(m, |k| c / k as f64)
    }

    /// `r_k`, 1-based.
    pub fn get(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.r.get(i).copied())
    }

    pub fn values(&self) -> &[f64] {
        &self.r
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn is_non_increasing(&self) -> bool {
        self.r.windows(2).all(|w| w[1] <= w[0])
    }

    /// `r^_k = sup_{m >= k} r_m` over the stored range.
    pub fn monotone_envelope(&self) -> VariationSequence {
        let mut out = self.r.clone();
        for i in (0..out.len().saturating_sub(1)).rev() {
            out[i] = out[i].max(out[i + 1]);
        }
        VariationSequence { r: out }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    const ZETA2: f64 = PI * PI / 6.0;

    #[test]
    fn zeta_tail_matches_closed_forms() {
        assert_abs_diff_eq!(zeta_tail(1, 2.0), ZETA2, epsilon = 1e-14);
        assert_abs_diff_eq!(zeta_tail(1, 4.0), PI.powi(4) / 90.0, epsilon = 1e-14);
        assert_abs_diff_eq!(zeta_tail(1, 3.0), 1.202_056_903_159_594_2, epsilon = 1e-14);
        assert_abs_diff_eq!(zeta_tail(1, 1.5), 2.612_375_348_685_488, epsilon = 1e-12);
        // Oracle: pi^2/6 minus a short direct sum.
        for start in [2u64, 3, 10, 63, 64, 65, 1000] {
            let head: f64 = (1..start).map(|j| 1.0 / (j as f64 * j as f64)).sum();
            assert_abs_diff_eq!(zeta_tail(start, 2.0), ZETA2 - head, epsilon = 1e-12);
        }
    }

    #[test]
    fn tail_sum_examples() {
        assert_eq!(tail_sum(&BoundaryCondition::Free, 1, 2.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            tail_sum(&BoundaryCondition::AllPlus, 1, 2.0).unwrap(),
            1.644_934_066_848_226_4,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            tail_sum(&BoundaryCondition::AllMinus, 3, 2.0).unwrap(),
            -(ZETA2 - 1.25),
            epsilon = 1e-12
        );
        assert!(tail_sum(&BoundaryCondition::Fixed(vec![1]), 1, 2.0).is_err());
        assert!(tail_sum(&BoundaryCondition::AllPlus, 0, 2.0).is_err());
    }

    #[test]
    fn phi0_examples() {
        let s0 = PotentialSpec::new(2.0, 0.0, -1.0, 8).unwrap();
        assert_eq!(phi0_eval(&[1, -1, 1], &s0, &BoundaryCondition::AllPlus).unwrap(), -1.0);
        let s1 = PotentialSpec::ising(2.0, 1.0).unwrap();
        assert_abs_diff_eq!(
            phi0_eval(&[1], &s1, &BoundaryCondition::AllPlus).unwrap(),
            ZETA2,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            phi0_eval(&[1, -1], &s1, &BoundaryCondition::Free).unwrap(),
            -1.0,
            epsilon = 1e-15
        );
        assert!(phi0_eval(&[], &s1, &BoundaryCondition::Free).is_err());
        assert!(phi0_eval(&[0], &s1, &BoundaryCondition::Free).is_err());
    }

    #[test]
    fn fixed_boundary_truncates_at_radius() {
        let spec = PotentialSpec::new(2.0, 1.0, 0.0, 2).unwrap();
        let bc = BoundaryCondition::Fixed(vec![1, 1, 1, 1]);
        // window (+1), tail sites 1 and 2 counted, 3 and 4 dropped
        assert_abs_diff_eq!(phi0_eval(&[1], &spec, &bc).unwrap(), 1.25, epsilon = 1e-15);
        let long = PotentialSpec::new(2.0, 1.0, 0.0, 10_000).unwrap();
        let bc = BoundaryCondition::Fixed(vec![1; 10_000]);
        let exact = phi0_eval(&[1], &long, &BoundaryCondition::AllPlus).unwrap();
        let trunc = phi0_eval(&[1], &long, &bc).unwrap();
        // truncation error 2 beta sum_{j > 10000} is an upper bound
        assert!(exact - trunc <= 2.0 * zeta_tail(10_001, 2.0));
        assert!(exact - trunc > 0.0);
    }

    #[test]
    fn q_examples() {
        let s = PotentialSpec::new(2.0, 0.0, -LN_2, 8).unwrap();
        assert_abs_diff_eq!(q_eval(&[1], &s, &BoundaryCondition::Free).unwrap(), 0.5, epsilon = 1e-15);
        let s = PotentialSpec::normalized(2.0, 1.0).unwrap();
        let q = q_eval(&[1], &s, &BoundaryCondition::AllPlus).unwrap();
        assert_abs_diff_eq!(q, 0.5 * (-K_MARGIN).exp(), epsilon = 1e-14);
        assert!(q < 0.5);
        let qm = q_eval(&[1], &s, &BoundaryCondition::AllMinus).unwrap();
        assert!(q > qm);
        let hot = PotentialSpec::new(1.5, 1e3, 0.0, 8).unwrap();
        assert!(matches!(
            q_eval(&[1], &hot, &BoundaryCondition::AllPlus),
            Err(Error::NumericRange { .. })
        ));
    }

    #[test]
    fn choose_k_examples() {
        assert_abs_diff_eq!(choose_k(0.0, 2.0), -(LN_2 + 1e-3), epsilon = 1e-15);
        assert_abs_diff_eq!(choose_k(0.0, 2.0), -0.694_147, epsilon = 1e-6);
        assert_abs_diff_eq!(choose_k(1.0, 2.0), -2.339_081, epsilon = 1e-6);
    }

    #[test]
    fn choose_k_certifies_q_below_half() {
        let spec = PotentialSpec::normalized(2.0, 1.0).unwrap();
        let mut rng = rng_from_seed(11);
        for _ in 0..20_000 {
            let len = rng.random_range(1..40);
            let u: Vec<i8> = (0..len).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
            assert!(q_eval(&u, &spec, &BoundaryCondition::AllPlus).unwrap() < 0.5);
            assert!(q_eval(&u, &spec, &BoundaryCondition::AllMinus).unwrap() < 0.5);
        }
    }

    #[test]
    fn variation_bound_examples() {
        let s0 = PotentialSpec::ising(2.0, 0.0).unwrap();
        assert_eq!(variation_bound(3, &s0).unwrap(), 0.0);
        let s1 = PotentialSpec::ising(2.0, 1.0).unwrap();
        let head: f64 = (1..10).map(|j| 1.0 / (j * j) as f64).sum();
        let v10 = variation_bound(10, &s1).unwrap();
        assert_abs_diff_eq!(v10, 2.0 * (ZETA2 - head), epsilon = 1e-12);
        assert_abs_diff_eq!(v10, 0.21033, epsilon = 1e-5);
        assert_abs_diff_eq!(variation_envelope(10, &s1).unwrap(), 0.2, epsilon = 1e-15);
        // the envelope bounds the next depth
        for n in 1..200 {
            assert!(variation_bound(n + 1, &s1).unwrap() <= variation_envelope(n, &s1).unwrap());
            assert!(variation_bound(n + 1, &s1).unwrap() < variation_bound(n, &s1).unwrap());
        }
        assert!(variation_bound(0, &s1).is_err());
    }

    #[test]
    fn empirical_variation_sits_below_the_bound() {
        let spec = PotentialSpec::normalized(2.0, 1.0).unwrap();
        let f = |x: &[i8], s: Sign| phi0_eval(x, &spec, &BoundaryCondition::from_sign(s)).unwrap();
        let a = Alphabet::spins();
        let mut prev = f64::INFINITY;
        for n in 1..=12 {
            let e = empirical_variation(f, &a, n, 24, 4_000, 5 + n as u64);
            let b = variation_bound(n, &spec).unwrap();
            assert!(e > 0.0);
            assert!(e <= b + 1e-12, "n={n}: {e} > {b}");
            assert!(e <= prev + 1e-9);
            prev = e;
        }
        let flat = PotentialSpec::normalized(2.0, 0.0).unwrap();
        let g = |x: &[i8], s: Sign| phi0_eval(x, &flat, &BoundaryCondition::from_sign(s)).unwrap();
        assert_eq!(empirical_variation(g, &a, 3, 8, 100, 1), 0.0);
    }

    #[test]
    fn variation_sequence_envelope() {
        let r = VariationSequence::new(vec![0.5, 1.0, 0.2, 0.3, 0.1]).unwrap();
        assert!(!r.is_non_increasing());
        let e = r.monotone_envelope();
        assert_eq!(e.values(), &[1.0, 1.0, 0.3, 0.3, 0.1]);
        assert!(e.is_non_increasing());
        assert_eq!(e.get(1), Some(1.0));
        assert_eq!(e.get(0), None);
        assert!(VariationSequence::new(vec![-0.1]).is_err());
        assert_abs_diff_eq!(VariationSequence::harmonic(2.0, 4).unwrap().get(4).unwrap(), 0.5);
    }
}
