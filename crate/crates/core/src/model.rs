//! Mean-field quantities of the vertex-weighted edge/triangle model.
//!
//! A configuration is a 0/1 spin per vertex. With `w` spin-1 vertices the
//! Gibbs weight is
//!
//! ```text
//! exp((a1/n) C(w,2) + (a2/n^2) C(w,3)) * p^w (1-p)^(n-w)
//! ```
//!
//! so every quantity here depends on a configuration only through `w`.
//! Pair and triple counts are unordered throughout: that is the convention
//! under which the single-site update rule and the level weights describe
//! the same reversible chain.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numeric::{logistic_pair, logit, xlogx_over, TwoSum};

/// Parameters `(n, p, alpha1, alpha2)` of the Gibbs measure and its Glauber
/// dynamics. Validated once at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ModelParams {
    n: usize,
    p: f64,
    alpha1: f64,
    alpha2: f64,
}

#[derive(Deserialize)]
struct RawParams {
    n: usize,
    p: f64,
    alpha1: f64,
    alpha2: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        ModelParams::new(raw.n, raw.p, raw.alpha1, raw.alpha2)
    }
}

impl ModelParams {
    pub fn new(n: usize, p: f64, alpha1: f64, alpha2: f64) -> Result<Self> {
        if n == 0 {
            return domain("n must be at least 1");
        }
        if !(p > 0.0 && p < 1.0) {
            return domain(format!("p must lie in (0, 1), got {p}"));
        }
        if !(alpha1 >= 0.0 && alpha1.is_finite()) {
            return domain(format!("alpha1 must be finite and >= 0, got {alpha1}"));
        }
        if !(alpha2 >= 0.0 && alpha2.is_finite()) {
            return domain(format!("alpha2 must be finite and >= 0, got {alpha2}"));
        }
        Ok(Self {
            n,
            p,
            alpha1,
            alpha2,
        })
    }

    /// Same couplings, different vertex count.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(n, self.p, self.alpha1, self.alpha2)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    /// `H'(s) = (a1/n) s + (a2/n^2) s(s-1)/2`, the change in the Hamiltonian
    /// when a vertex whose `s` neighbours carry spin 1 is switched on.
    pub fn local_field(&self, s: usize) -> Result<f64> {
        self.check_neighbour_count(s)?;
        Ok(self.local_field_unchecked(s))
    }

    pub(crate) fn local_field_unchecked(&self, s: usize) -> f64 {
        let n = self.n as f64;
        let s = s as f64;
        self.alpha1 / n * s + self.alpha2 / (2.0 * n * n) * s * (s - 1.0)
    }

    /// Probability that the updated vertex receives spin 1.
    pub fn update_prob_plus(&self, s: usize) -> Result<f64> {
        Ok(self.update_probs(s)?.0)
    }

    /// Probability that the updated vertex receives spin 0.
    pub fn update_prob_minus(&self, s: usize) -> Result<f64> {
        Ok(self.update_probs(s)?.1)
    }

    /// `(P+, P-)` for a vertex with `s` spin-1 neighbours. Both are formed as
    /// fractions over one denominator rather than as `1 - other`.
    pub fn update_probs(&self, s: usize) -> Result<(f64, f64)> {
        self.check_neighbour_count(s)?;
        Ok(self.update_probs_unchecked(s))
    }

    pub(crate) fn update_probs_unchecked(&self, s: usize) -> (f64, f64) {
        logistic_pair(self.log_odds() + self.local_field_unchecked(s))
    }

    fn check_neighbour_count(&self, s: usize) -> Result<()> {
        if s >= self.n {
            return domain(format!(
                "neighbour count {s} outside 0..={} for n = {}",
                self.n - 1,
                self.n
            ));
        }
        Ok(())
    }

    fn log_odds(&self) -> f64 {
        logit(self.p)
    }

    fn exponent(&self, c: f64) -> f64 {
        self.alpha1 * c + 0.5 * self.alpha2 * c * c
    }

    /// Limiting update probability at magnetization `c`:
    /// `p e^g / (p e^g + 1 - p)` with `g = a1 c + a2 c^2 / 2`.
    pub fn lambda(&self, c: f64) -> Result<f64> {
        check_unit_closed(c)?;
        Ok(self.lambda_unchecked(c))
    }

    pub(crate) fn lambda_unchecked(&self, c: f64) -> f64 {
        logistic_pair(self.log_odds() + self.exponent(c)).0
    }

    /// Closed-form derivatives of `lambda` of order 1, 2 or 3.
    ///
    /// With `L = lambda`, `g' = a1 + a2 c`, `g'' = a2`:
    /// `L' = L(1-L) g'`,
    /// `L'' = L(1-L) [(1-2L) g'^2 + g'']`,
    /// `L''' = L(1-L) [((1-2L)^2 - 2L(1-L)) g'^3 + 3(1-2L) g' g'']`.
    pub fn lambda_derivative(&self, c: f64, order: u8) -> Result<f64> {
        check_unit_closed(c)?;
        let (l, m) = logistic_pair(self.log_odds() + self.exponent(c));
        let v = l * m;
        let g1 = self.alpha1 + self.alpha2 * c;
        let g2 = self.alpha2;
        let skew = m - l;
        match order {
            1 => Ok(v * g1),
            2 => Ok(v * (skew * g1 * g1 + g2)),
            3 => Ok(v * ((skew * skew - 2.0 * v) * g1 * g1 * g1 + 3.0 * skew * g1 * g2)),
            _ => domain(format!("derivative order must be 1, 2 or 3, got {order}")),
        }
    }

    /// Free-energy density
    /// `(a1/2) c^2 + (a2/6) c^3 - c ln(c/p) - (1-c) ln((1-c)/(1-p))`,
    /// with `0 ln 0 = 0` at the endpoints.
    pub fn phi(&self, c: f64) -> Result<f64> {
        check_unit_closed(c)?;
        Ok(self.phi_unchecked(c))
    }

    pub(crate) fn phi_unchecked(&self, c: f64) -> f64 {
        0.5 * self.alpha1 * c * c + self.alpha2 / 6.0 * c * c * c
            - xlogx_over(c, self.p)
            - xlogx_over(1.0 - c, 1.0 - self.p)
    }

    /// Derivatives of `phi` on the open interval; they diverge at 0 and 1.
    pub fn phi_derivative(&self, c: f64, order: u8) -> Result<f64> {
        if !(c > 0.0 && c < 1.0) {
            return domain(format!("phi derivatives need 0 < c < 1, got {c}"));
        }
        match order {
            1 => Ok(self.phi_prime(c)),
            2 => Ok(self.phi_second(c)),
            3 => Ok(self.phi_third(c)),
            _ => domain(format!("derivative order must be 1, 2 or 3, got {order}")),
        }
    }

    pub(crate) fn phi_prime(&self, c: f64) -> f64 {
        self.log_odds() + self.exponent(c) - logit(c)
    }

    pub(crate) fn phi_second(&self, c: f64) -> f64 {
        self.alpha1 + self.alpha2 * c - 1.0 / (c * (1.0 - c))
    }

    pub(crate) fn phi_third(&self, c: f64) -> f64 {
        let q = c * (1.0 - c);
        self.alpha2 + (1.0 - 2.0 * c) / (q * q)
    }

    /// `ln a_k`, the unnormalised log-mass of the level of all configurations
    /// with exactly `k` spin-1 vertices.
    pub fn log_level_weight(&self, k: usize) -> Result<f64> {
        if k > self.n {
            return domain(format!("level {k} outside 0..={}", self.n));
        }
        let half = k.min(self.n - k);
        let partials = ln_binomial_partials(self.n, half);
        Ok(self.assemble_level_weight(k, partials[half]))
    }

    /// All `n + 1` level log-weights; entry `k` is bit-identical to
    /// [`ModelParams::log_level_weight`]`(k)`.
    pub fn log_level_weights(&self) -> Vec<f64> {
        let n = self.n;
        let partials = ln_binomial_partials(n, n / 2);
        (0..=n)
            .map(|k| self.assemble_level_weight(k, partials[k.min(n - k)]))
            .collect()
    }

    fn assemble_level_weight(&self, k: usize, ln_binom: TwoSum) -> f64 {
        let n = self.n as f64;
        let kf = k as f64;
        let mut acc = ln_binom;
        acc.add_product(kf, self.p.ln());
        acc.add_product((self.n - k) as f64, (-self.p).ln_1p());
        acc.add_product(self.alpha1 / n, pairs(k));
        acc.add_product(self.alpha2 / (n * n), triples(k));
        acc.value()
    }

    /// `H = (a1/n) C(w,2) + (a2/n^2) C(w,3)` for a configuration with `w`
    /// spin-1 vertices.
    pub fn hamiltonian(&self, config: &SpinConfiguration) -> Result<f64> {
        if config.len() != self.n {
            return domain(format!(
                "configuration has {} vertices, model has {}",
                config.len(),
                self.n
            ));
        }
        let n = self.n as f64;
        let w = config.ones_count();
        Ok(self.alpha1 / n * pairs(w) + self.alpha2 / (n * n) * triples(w))
    }
}

fn check_unit_closed(c: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&c) {
        return domain(format!("magnetization must lie in [0, 1], got {c}"));
    }
    Ok(())
}

fn pairs(k: usize) -> f64 {
    let k = k as u128;
    (k * k.saturating_sub(1) / 2) as f64
}

fn triples(k: usize) -> f64 {
    let k = k as u128;
    (k * k.saturating_sub(1) * k.saturating_sub(2) / 6) as f64
}

/// Running sums `ln C(n, m)` for `m = 0..=up_to`, accumulated term by term
/// as `ln(n - j) - ln(j + 1)` without rounding the running total.
fn ln_binomial_partials(n: usize, up_to: usize) -> Vec<TwoSum> {
    let mut out = Vec::with_capacity(up_to + 1);
    let mut acc = TwoSum::new(0.0);
    out.push(acc);
    for j in 0..up_to {
        acc.add(((n - j) as f64).ln());
        acc.add(-((j + 1) as f64).ln());
        out.push(acc);
    }
    out
}

/// `ln C(n, k)` computed as an exact-order sum of logarithms.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let half = k.min(n - k);
    ln_binomial_partials(n, half)[half].value()
}

/// A 0/1 spin per vertex together with the cached number of 1-spins.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinConfiguration {
    spins: Vec<u8>,
    ones: usize,
}

impl SpinConfiguration {
    pub fn zeros(n: usize) -> Self {
        Self {
            spins: vec![0; n],
            ones: 0,
        }
    }

    pub fn ones(n: usize) -> Self {
        Self {
            spins: vec![1; n],
            ones: n,
        }
    }

    /// Configuration at level `k`: the first `k` vertices carry spin 1.
    pub fn at_level(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return domain(format!("level {k} outside 0..={n}"));
        }
        let mut spins = vec![0u8; n];
        spins[..k].fill(1);
        Ok(Self { spins, ones: k })
    }

    pub fn from_spins(spins: Vec<u8>) -> Result<Self> {
        if let Some(bad) = spins.iter().find(|&&s| s > 1) {
            return domain(format!("spins must be 0 or 1, found {bad}"));
        }
        let ones = spins.iter().filter(|&&s| s == 1).count();
        Ok(Self { spins, ones })
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn ones_count(&self) -> usize {
        self.ones
    }

    pub fn get(&self, i: usize) -> u8 {
        self.spins[i]
    }

    pub fn spins(&self) -> &[u8] {
        &self.spins
    }

    /// Normalised magnetization `ones / n`.
    pub fn magnetization(&self) -> f64 {
        self.ones as f64 / self.spins.len() as f64
    }

    /// Sets spin `i` and keeps the 1-count cache in step.
    #[inline]
    pub fn set(&mut self, i: usize, value: u8) {
        debug_assert!(value <= 1);
        let old = self.spins[i];
        if old != value {
            self.spins[i] = value;
            if value == 1 {
                self.ones += 1;
            } else {
                self.ones -= 1;
            }
        }
        self.debug_check();
    }

    #[inline]
    fn debug_check(&self) {
        debug_assert!(self.ones <= self.spins.len());
        #[cfg(any(test, feature = "strict-invariants"))]
        assert_eq!(
            self.ones,
            self.spins.iter().filter(|&&s| s == 1).count(),
            "ones_count cache out of sync"
        );
    }

    /// Coordinatewise `self >= other`.
    pub fn dominates(&self, other: &Self) -> bool {
        self.spins.len() == other.spins.len()
            && self.spins.iter().zip(&other.spins).all(|(a, b)| a >= b)
    }

    pub fn hamming(&self, other: &Self) -> usize {
        self.spins
            .iter()
            .zip(&other.spins)
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// First two moments of a vertex-weight law supported on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    m1: f64,
    m2: f64,
}

impl MomentPair {
    /// Requires `m1^2 <= m2 <= m1` (Cauchy-Schwarz and `U^2 <= U`).
    pub fn new(m1: f64, m2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&m1) || !(0.0..=1.0).contains(&m2) {
            return domain(format!("moments must lie in [0, 1], got ({m1}, {m2})"));
        }
        if m1 * m1 > m2 || m2 > m1 {
            return domain(format!(
                "moments violate m1^2 <= m2 <= m1: m1 = {m1}, m2 = {m2}"
            ));
        }
        Ok(Self { m1, m2 })
    }

    pub fn m1(&self) -> f64 {
        self.m1
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }
}

/// Expected edge and triangle weight `(e, t) = (E(U)^2, E(U^2)^3)`.
pub fn density_region(moments: MomentPair) -> (f64, f64) {
    let e = moments.m1 * moments.m1;
    let t = moments.m2 * moments.m2 * moments.m2;
    (e, t)
}

/// Number of `m`-cliques among `c1` spin-1 vertices: `C(c1, m)`.
pub fn subgraph_count(c1: u64, m: u64) -> Result<u128> {
    if m > c1 {
        return Ok(0);
    }
    let m = m.min(c1 - m);
    let mut acc: u128 = 1;
    for i in 0..m {
        acc = acc
            .checked_mul(u128::from(c1 - i))
            .ok_or_else(|| Error::Domain(format!("C({c1}, {m}) overflows u128")))?
            / u128::from(i + 1);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(n: usize, p: f64, a1: f64, a2: f64) -> ModelParams {
        ModelParams::new(n, p, a1, a2).unwrap()
    }

    #[test]
    fn construction_rejects_invalid_values() {
        assert!(ModelParams::new(0, 0.5, 0.0, 0.0).is_err());
        assert!(ModelParams::new(3, 0.0, 0.0, 0.0).is_err());
        assert!(ModelParams::new(3, 1.0, 0.0, 0.0).is_err());
        assert!(ModelParams::new(3, 1.5, 0.0, 0.0).is_err());
        assert!(ModelParams::new(3, f64::NAN, 0.0, 0.0).is_err());
        assert!(ModelParams::new(3, 0.5, -0.1, 0.0).is_err());
        assert!(ModelParams::new(3, 0.5, 0.0, -1.0).is_err());
        let bad: std::result::Result<ModelParams, _> =
            serde_json::from_str(r#"{"n":3,"p":2.0,"alpha1":0.0,"alpha2":0.0}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn local_field_examples() {
        assert_eq!(params(10, 0.5, 0.0, 0.0).local_field(7).unwrap(), 0.0);
        assert!((params(10, 0.5, 1.0, 0.0).local_field(5).unwrap() - 0.5).abs() < 1e-15);
        assert!((params(10, 0.5, 1.0, 2.0).local_field(5).unwrap() - 0.7).abs() < 1e-15);
        assert!(params(10, 0.5, 1.0, 2.0).local_field(10).is_err());
    }

    #[test]
    fn update_prob_examples() {
        let m = params(10, 0.3, 0.0, 0.0);
        for s in 0..10 {
            assert!((m.update_prob_plus(s).unwrap() - 0.3).abs() < 1e-15);
        }
        let m = params(10, 0.5, 1.0, 2.0);
        let expect = 0.7f64.exp() / (0.7f64.exp() + 1.0);
        assert!((m.update_prob_plus(5).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 0.66819).abs() < 1e-5);
        let m = params(10, 0.9, 0.0, 0.0);
        assert!((m.update_prob_plus(0).unwrap() - 0.9).abs() < 1e-15);
        assert!(m.update_prob_plus(10).is_err());
    }

    #[test]
    fn lambda_examples() {
        assert!((params(1, 0.4, 0.0, 0.0).lambda(0.37).unwrap() - 0.4).abs() < 1e-15);
        let v = params(1, 0.5, 1.0, 2.0).lambda(0.5).unwrap();
        assert!((v - 0.75f64.exp() / (1.0 + 0.75f64.exp())).abs() < 1e-15);
        assert!((v - 0.67918).abs() < 1e-5);
        let p = 1.0 / (1.0 + 2f64.exp());
        assert!((params(1, p, 4.0, 0.0).lambda(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(params(1, 0.5, 1.0, 1.0).lambda(1.01).is_err());
        assert!(params(1, 0.5, 1.0, 1.0).lambda(-0.01).is_err());
    }

    #[test]
    fn lambda_derivative_examples() {
        let m = params(1, 0.3, 0.0, 0.0);
        assert_eq!(m.lambda_derivative(0.2, 1).unwrap(), 0.0);
        let p = 1.0 / (1.0 + 2f64.exp());
        let crit = params(1, p, 4.0, 0.0);
        assert!((crit.lambda_derivative(0.5, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!(crit.lambda_derivative(0.5, 2).unwrap().abs() < 1e-12);
        assert!((crit.lambda_derivative(0.5, 3).unwrap() + 8.0).abs() < 1e-12);
        assert!(crit.lambda_derivative(0.5, 4).is_err());
        assert!(crit.lambda_derivative(0.5, 0).is_err());
    }

    fn central_difference<F: Fn(f64) -> f64>(f: F, c: f64, h: f64) -> f64 {
        (f(c + h) - f(c - h)) / (2.0 * h)
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        let sets = [
            params(1, 0.5, 0.5, 0.5),
            params(1, 0.05, 6.0, 0.0),
            params(1, 0.2, 2.0, 5.0),
            params(1, 0.7, 0.0, 3.0),
        ];
        for m in sets {
            for i in 1..20 {
                let c = i as f64 / 20.0;
                let d1 = m.lambda_derivative(c, 1).unwrap();
                let d2 = m.lambda_derivative(c, 2).unwrap();
                let d3 = m.lambda_derivative(c, 3).unwrap();
                let fd1 = central_difference(|x| m.lambda_unchecked(x), c, h);
                let fd2 = central_difference(|x| m.lambda_derivative(x, 1).unwrap(), c, h);
                let fd3 = central_difference(|x| m.lambda_derivative(x, 2).unwrap(), c, h);
                assert!(rel_close(d1, fd1, 1e-6), "{m:?} c={c}: {d1} vs {fd1}");
                assert!(rel_close(d2, fd2, 1e-6), "{m:?} c={c}: {d2} vs {fd2}");
                assert!(rel_close(d3, fd3, 1e-6), "{m:?} c={c}: {d3} vs {fd3}");

                let p1 = m.phi_derivative(c, 1).unwrap();
                let p2 = m.phi_derivative(c, 2).unwrap();
                let p3 = m.phi_derivative(c, 3).unwrap();
                let fp1 = central_difference(|x| m.phi_unchecked(x), c, h);
                let fp2 = central_difference(|x| m.phi_prime(x), c, h);
                let fp3 = central_difference(|x| m.phi_second(x), c, h);
                assert!(rel_close(p1, fp1, 1e-6), "{m:?} c={c}: {p1} vs {fp1}");
                assert!(rel_close(p2, fp2, 1e-6), "{m:?} c={c}: {p2} vs {fp2}");
                assert!(rel_close(p3, fp3, 1e-6), "{m:?} c={c}: {p3} vs {fp3}");
            }
        }
    }

    #[test]
    fn phi_examples() {
        let m = params(1, 0.5, 0.0, 0.0);
        assert!(m.phi(0.5).unwrap().abs() < 1e-15);
        assert!((m.phi(0.0).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        let m = params(1, 0.3, 2.0, 3.0);
        assert!((m.phi(0.0).unwrap() - 0.7f64.ln()).abs() < 1e-15);
        assert!((m.phi(1.0).unwrap() - (1.0 + 0.5 + 0.3f64.ln())).abs() < 1e-15);
        // Local maximum near the lower attractor of the low-temperature set.
        let m = params(1, 0.05, 6.0, 0.0);
        assert!(m.phi_derivative(0.070, 1).unwrap() > 0.0);
        assert!(m.phi_derivative(0.085, 1).unwrap() < 0.0);
    }

    #[test]
    fn phi_derivative_examples() {
        assert!(
            params(1, 0.5, 0.0, 0.0)
                .phi_derivative(0.5, 1)
                .unwrap()
                .abs()
                < 1e-15
        );
        let m = params(1, 0.2, 1.3, 2.2);
        let v = m.phi_derivative(0.5, 2).unwrap();
        assert!((v - (1.3 + 1.1 - 4.0)).abs() < 1e-14);
        assert!(
            params(1, 0.3, 4.0, 0.0)
                .phi_derivative(0.5, 2)
                .unwrap()
                .abs()
                < 1e-15
        );
        assert!(m.phi_derivative(0.0, 1).is_err());
        assert!(m.phi_derivative(1.0, 2).is_err());
        assert!(m.phi_derivative(0.5, 7).is_err());
    }

    #[test]
    fn phi_prime_diverges_at_endpoints() {
        let m = params(1, 0.3, 2.0, 1.0);
        assert!(m.phi_derivative(1e-12, 1).unwrap() > 20.0);
        assert!(m.phi_derivative(1.0 - 1e-12, 1).unwrap() < -20.0);
    }

    #[test]
    fn log_level_weight_examples() {
        let m = params(2, 0.5, 0.0, 0.0);
        assert!((m.log_level_weight(1).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        let m = params(2, 0.5, 2.0, 0.0);
        assert!((m.log_level_weight(2).unwrap() - (1.0 + 0.25f64.ln())).abs() < 1e-15);
        let m = params(1, 0.37, 5.0, 9.0);
        assert!((m.log_level_weight(1).unwrap() - 0.37f64.ln()).abs() < 1e-15);
        assert!(m.log_level_weight(2).is_err());
    }

    #[test]
    fn level_weights_match_direct_product() {
        for n in 1..=20usize {
            for &(p, a1, a2) in &[(0.5, 0.0, 0.0), (0.2, 1.5, 2.5), (0.8, 3.0, 0.7)] {
                let m = params(n, p, a1, a2);
                let table = m.log_level_weights();
                for (k, &logged) in table.iter().enumerate() {
                    let mut binom = 1.0f64;
                    for j in 0..k {
                        binom = binom * (n - j) as f64 / (j + 1) as f64;
                    }
                    let kk = k as f64;
                    let direct = binom
                        * (a1 / n as f64 * kk * (kk - 1.0) / 2.0
                            + a2 / (n * n) as f64 * kk * (kk - 1.0) * (kk - 2.0) / 6.0)
                            .exp()
                        * p.powi(k as i32)
                        * (1.0 - p).powi((n - k) as i32);
                    let single = m.log_level_weight(k).unwrap();
                    assert_eq!(single.to_bits(), logged.to_bits());
                    let rel = (single.exp() - direct).abs() / direct;
                    assert!(rel < 1e-12, "n={n} k={k}: rel {rel}");
                }
            }
        }
    }

    #[test]
    fn ln_binomial_is_accurate_at_large_n() {
        // ln C(1000, 500) reference from an independent high-precision evaluation.
        let v = ln_binomial(1000, 500);
        assert!((v - 689.467_261_567_851_2).abs() < 1e-11, "{v}");
        assert_eq!(ln_binomial(10, 0), 0.0);
        assert!((ln_binomial(10, 3) - 120f64.ln()).abs() < 1e-14);
        assert_eq!(ln_binomial(3, 4), f64::NEG_INFINITY);
    }

    #[test]
    fn hamiltonian_examples() {
        let m = params(4, 0.5, 2.0, 3.0);
        assert_eq!(m.hamiltonian(&SpinConfiguration::zeros(4)).unwrap(), 0.0);
        let m = params(3, 0.5, 3.0, 9.0);
        assert!((m.hamiltonian(&SpinConfiguration::ones(3)).unwrap() - 4.0).abs() < 1e-15);
        let m = params(5, 0.5, 3.0, 9.0);
        let one = SpinConfiguration::at_level(5, 1).unwrap();
        assert_eq!(m.hamiltonian(&one).unwrap(), 0.0);
        assert!(m.hamiltonian(&SpinConfiguration::zeros(4)).is_err());
    }

    #[test]
    fn hamiltonian_is_consistent_with_level_weight() {
        let m = params(9, 0.3, 1.7, 2.9);
        for k in 0..=9 {
            let cfg = SpinConfiguration::at_level(9, k).unwrap();
            let h = m.hamiltonian(&cfg).unwrap();
            let rebuilt = m.log_level_weight(k).unwrap()
                - ln_binomial(9, k)
                - k as f64 * 0.3f64.ln()
                - (9 - k) as f64 * 0.7f64.ln();
            assert!((h - rebuilt).abs() < 1e-12, "k={k}: {h} vs {rebuilt}");
        }
    }

    #[test]
    fn spin_configuration_tracks_ones() {
        let mut cfg = SpinConfiguration::zeros(5);
        cfg.set(2, 1);
        cfg.set(2, 1);
        cfg.set(4, 1);
        assert_eq!(cfg.ones_count(), 2);
        cfg.set(2, 0);
        assert_eq!(cfg.ones_count(), 1);
        assert!((cfg.magnetization() - 0.2).abs() < 1e-15);
        assert!(SpinConfiguration::from_spins(vec![0, 2]).is_err());
        assert!(SpinConfiguration::at_level(3, 4).is_err());
        let a = SpinConfiguration::ones(5);
        assert!(a.dominates(&cfg));
        assert!(!cfg.dominates(&a));
        assert_eq!(a.hamming(&cfg), 4);
    }

    /// Counts `m`-subsets of the spin-1 vertices by enumerating ordered
    /// distinct index tuples and dividing by `m!`.
    fn brute_force_subgraphs(c1: usize, m: usize) -> u128 {
        fn rec(c1: usize, m: usize, used: &mut Vec<usize>) -> u128 {
            if used.len() == m {
                return 1;
            }
            let mut total = 0;
            for i in 0..c1 {
                if !used.contains(&i) {
                    used.push(i);
                    total += rec(c1, m, used);
                    used.pop();
                }
            }
            total
        }
        let ordered = rec(c1, m, &mut Vec::new());
        let fact: u128 = (1..=m as u128).product();
        ordered / fact
    }

    #[test]
    fn subgraph_count_matches_enumeration() {
        assert_eq!(subgraph_count(5, 0).unwrap(), 1);
        assert_eq!(subgraph_count(5, 2).unwrap(), 10);
        assert_eq!(subgraph_count(4, 3).unwrap(), 4);
        assert_eq!(subgraph_count(3, 5).unwrap(), 0);
        for c1 in 0..=8 {
            for m in 0..=4 {
                assert_eq!(
                    subgraph_count(c1 as u64, m as u64).unwrap(),
                    brute_force_subgraphs(c1, m),
                    "c1={c1} m={m}"
                );
            }
        }
    }

    #[test]
    fn density_region_examples() {
        let (e, t) = density_region(MomentPair::new(0.5, 0.5).unwrap());
        assert_eq!((e, t), (0.25, 0.125));
        assert!((t - e.powf(1.5)).abs() < 1e-15);
        let (e, t) = density_region(MomentPair::new(0.5, 0.25).unwrap());
        assert_eq!((e, t), (0.25, 0.015625));
        assert_eq!(t, e * e * e);
        let (e, t) = density_region(MomentPair::new(0.5, 0.3).unwrap());
        assert_eq!(e, 0.25);
        assert!((t - 0.027).abs() < 1e-15);
        assert!(e * e * e <= t && t <= e.powf(1.5));
        assert!(MomentPair::new(0.5, 0.6).is_err());
        assert!(MomentPair::new(0.5, 0.2).is_err());
    }

    proptest! {
        #[test]
        fn update_probs_are_complementary(
            n in 1usize..500, p in 0.001f64..0.999, a1 in 0.0f64..20.0, a2 in 0.0f64..20.0, frac in 0.0f64..1.0
        ) {
            let m = params(n, p, a1, a2);
            let s = ((n - 1) as f64 * frac) as usize;
            let (plus, minus) = m.update_probs(s).unwrap();
            prop_assert!(plus > 0.0 && plus < 1.0);
            prop_assert!((plus + minus - 1.0).abs() <= f64::EPSILON);
        }

        #[test]
        fn lambda_is_monotone(p in 0.001f64..0.999, a1 in 0.0f64..20.0, a2 in 0.0f64..20.0) {
            let m = params(1, p, a1, a2);
            let mut prev = m.lambda(0.0).unwrap();
            prop_assert!((prev - p).abs() < 1e-15);
            for i in 1..=100 {
                let v = m.lambda(i as f64 / 100.0).unwrap();
                if a1 + a2 > 1e-6 {
                    prop_assert!(v > prev || (v == prev && v > 1.0 - 1e-15));
                } else {
                    prop_assert!(v >= prev);
                }
                prev = v;
            }
        }

        #[test]
        fn hamiltonian_depends_only_on_level(bits in proptest::collection::vec(0u8..2, 1..40), seed in any::<u64>()) {
            let n = bits.len();
            let m = params(n, 0.4, 1.3, 2.1);
            let a = SpinConfiguration::from_spins(bits.clone()).unwrap();
            let mut shuffled = bits;
            let len = shuffled.len();
            shuffled.rotate_left((seed % len as u64) as usize);
            shuffled.reverse();
            let b = SpinConfiguration::from_spins(shuffled).unwrap();
            prop_assert_eq!(m.hamiltonian(&a).unwrap(), m.hamiltonian(&b).unwrap());
        }

        #[test]
        fn density_region_stays_in_realizable_band(m1 in 0.0f64..=1.0, mix in 0.0f64..=1.0) {
            let m2 = (m1 * m1 + mix * (m1 - m1 * m1)).clamp(m1 * m1, m1);
            let (e, t) = density_region(MomentPair::new(m1, m2).unwrap());
            prop_assert!(e * e * e <= t * (1.0 + 4.0 * f64::EPSILON));
            prop_assert!(t <= e.powf(1.5) * (1.0 + 4.0 * f64::EPSILON));
        }
    }
}
