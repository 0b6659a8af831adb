//! Small floating-point helpers shared by the model and exact-chain code.

/// Double-word accumulator (error-free transformations, Knuth two-sum).
///
/// Used where a sum of large, nearly cancelling terms must be rounded only
/// once, e.g. level log-weights at `n ~ 10^3..10^4`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct TwoSum {
    hi: f64,
    lo: f64,
}

impl TwoSum {
    pub(crate) fn new(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub(crate) fn add(&mut self, x: f64) {
        let s = self.hi + x;
        let bp = s - self.hi;
        let err = (self.hi - (s - bp)) + (x - bp);
        self.hi = s;
        self.lo += err;
    }

    /// Adds the exact product `a * b`.
    pub(crate) fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        let e = a.mul_add(b, -p);
        self.add(p);
        self.lo += e;
    }

    pub(crate) fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// `x * ln(x / y)` with the convention `0 * ln 0 = 0`.
pub(crate) fn xlogx_over(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / y).ln()
    }
}

/// `ln(x / (1 - x))`.
pub(crate) fn logit(x: f64) -> f64 {
    x.ln() - (-x).ln_1p()
}

/// Returns `(sigma(z), 1 - sigma(z))` where both entries are computed as
/// fractions over the same denominator, so they sum to one within an ulp.
pub(crate) fn logistic_pair(z: f64) -> (f64, f64) {
    if z >= 0.0 {
        let e = (-z).exp();
        let d = 1.0 + e;
        (1.0 / d, e / d)
    } else {
        let e = z.exp();
        let d = 1.0 + e;
        (e / d, 1.0 / d)
    }
}

/// Numerically stable `ln(sum(exp(x_i)))`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// `ln(exp(a) + exp(b))`.
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Bisection on a bracket `[lo, hi]` with `f(lo)` and `f(hi)` of opposite
/// (or zero) sign. Runs until the midpoint is no longer representable
/// between the endpoints.
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    if f(hi) == 0.0 {
        return hi;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sum_recovers_cancelled_bits() {
        let mut acc = TwoSum::new(1e16);
        acc.add(1.0);
        acc.add(-1e16);
        assert_eq!(acc.value(), 1.0);
    }

    #[test]
    fn logistic_pair_is_complementary() {
        for &z in &[-700.0, -30.0, -1.0, 0.0, 0.3, 5.0, 700.0] {
            let (a, b) = logistic_pair(z);
            assert!((a + b - 1.0).abs() <= f64::EPSILON, "z={z}");
        }
    }

    #[test]
    fn log_sum_exp_handles_huge_values() {
        let v = [1000.0, 1000.0];
        assert!((log_sum_exp(&v) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!((log_add_exp(1000.0, 1000.0) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0);
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }
}
