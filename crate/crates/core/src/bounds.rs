//! Guaranteed addition counts for a vector-scalar product.
//!
//! Write `C(n, k)` for the worst-case number of additions needed to multiply a
//! vector of `n` values, each at most `k`, by a constant, and `D(n, k)` for the
//! same problem when the values are distinct odd numbers summing to at most
//! `k`. Four rules relate them:
//!
//! 1. `C(n, k) <= D(n, k) + n` (align, sort, difference, accumulate);
//! 2. `D(n, k) <= C(n, x) + D(k / x, k)` for any split point `x`;
//! 3. `D(n, k) <= D(sqrt(k), k)`, since distinct odd values summing to `k`
//!    number at most `sqrt(k)`;
//! 4. both are at most `n * log2(k)` (Russian Peasants on every element).
//!
//! Chaining them yields: if `n >= (j + 1) / 2 * k^(1/j) * log2(k)` then
//! `C(n, k) <= j * n`. [`hypothesis_threshold`] computes the right-hand side
//! and [`min_j`] finds the best multiplier for a given `n`.

use alloc::vec::Vec;

use num_bigint::BigUint;

use crate::chain::max_diff_count;
use crate::error::{Error, Result};

/// A point at which to evaluate the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundQuery {
    pub n: u64,
    pub k: u64,
    pub j: u32,
}

impl BoundQuery {
    pub fn new(n: u64, k: u64, j: u32) -> Result<Self> {
        check_nk(n, k)?;
        if j == 0 {
            return Err(Error::InvalidParameter("j must be at least 1"));
        }
        Ok(BoundQuery { n, k, j })
    }

    pub fn threshold(&self) -> u128 {
        threshold_unchecked(self.j, self.k)
    }

    /// Whether `n` meets the hypothesis for this `j`.
    pub fn holds(&self) -> bool {
        u128::from(self.n) >= self.threshold()
    }
}

/// Result of [`min_j`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundReport {
    pub n: u64,
    pub k: u64,
    pub min_j: Option<u32>,
    /// Threshold of `min_j`, when there is one.
    pub threshold: Option<u128>,
    /// `min_j * n`.
    pub guaranteed_additions: Option<u128>,
    /// `n * ceil(log2 k)`, the Russian Peasants cost.
    pub fallback: u128,
}

impl BoundReport {
    /// The best of the two guarantees.
    pub fn best(&self) -> u128 {
        match self.guaranteed_additions {
            Some(g) => g.min(self.fallback),
            None => self.fallback,
        }
    }
}

fn check_nk(n: u64, k: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1"));
    }
    if k < 2 {
        return Err(Error::InvalidParameter("k must be at least 2"));
    }
    Ok(())
}

/// `ceil(log2 k)`.
pub fn ceil_log2(k: u64) -> u32 {
    if k <= 1 {
        0
    } else {
        64 - (k - 1).leading_zeros()
    }
}

/// Smallest `n` satisfying `n >= (j + 1) / 2 * k^(1/j) * log2(k)`.
///
/// When `k` is a power of two the comparison is done in integers, so the
/// result is exact. Otherwise it is computed in floating point and rounded
/// up, which may overstate the threshold by one but never understates it.
pub fn hypothesis_threshold(j: u32, k: u64) -> Result<u128> {
    if j == 0 {
        return Err(Error::InvalidParameter("j must be at least 1"));
    }
    if k < 2 {
        return Err(Error::InvalidParameter("k must be at least 2"));
    }
    Ok(threshold_unchecked(j, k))
}

fn threshold_unchecked(j: u32, k: u64) -> u128 {
    if k.is_power_of_two() {
        exact_threshold(j, k.trailing_zeros())
    } else {
        float_threshold(j, k)
    }
}

// For k = 2^b: 2n >= (j+1) b 2^(b/j)  <=>  (2n)^j >= ((j+1) b)^j 2^b.
fn exact_threshold(j: u32, b: u32) -> u128 {
    let t = BigUint::from(u64::from(j + 1) * u64::from(b));
    let rhs = t.pow(j) << b as usize;
    let ok = |n: u128| (BigUint::from(n) * 2u32).pow(j) >= rhs;
    // (j+1) b 2^ceil(b/j) / 2 always qualifies
    let mut hi: u128 = (u128::from(j + 1) * u128::from(b)) << b.div_ceil(j);
    hi = hi / 2 + 1;
    let mut lo: u128 = 0;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi.max(1)
}

fn float_threshold(j: u32, k: u64) -> u128 {
    let kf = k as f64;
    let v = f64::from(j + 1) / 2.0 * libm::pow(kf, 1.0 / f64::from(j)) * libm::log2(kf);
    let v = v * (1.0 + 16.0 * f64::EPSILON);
    (libm::ceil(v) as u128).max(1)
}

/// Smallest `j` in `1..=log2(k)` whose hypothesis `n` meets.
///
/// Past `log2(k)` the multiplier is no better than Russian Peasants, so the
/// scan stops there.
pub fn min_j(n: u64, k: u64) -> Result<BoundReport> {
    check_nk(n, k)?;
    let fallback = u128::from(n) * u128::from(ceil_log2(k));
    let mut report = BoundReport { n, k, min_j: None, threshold: None, guaranteed_additions: None, fallback };
    for j in 1..=k.ilog2() {
        let t = threshold_unchecked(j, k);
        if u128::from(n) >= t {
            report.min_j = Some(j);
            report.threshold = Some(t);
            report.guaranteed_additions = Some(u128::from(j) * u128::from(n));
            break;
        }
    }
    Ok(report)
}

/// One instance of the rule chain behind the theorem, for `j >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremChain {
    pub j: u32,
    /// Split points `x_p = k^((j - p) / j)` for `p = 0..j-1`.
    pub x: Vec<f64>,
    /// Rule 4 bound on each `D(k^(1/j), k^((j - p) / j))` term.
    pub terms: Vec<f64>,
    /// `(j + 1) / 2 * k^(1/j) * log2(k)`, which dominates the sum of `terms`.
    pub first_term: f64,
    /// `(j - 1) * n`, the accumulation passes.
    pub linear_term: f64,
    /// `first_term + linear_term`; at most `j * n` exactly when the
    /// hypothesis holds.
    pub bound: f64,
    /// Rule 2 applied at each step `x_p -> x_(p+1)`, both parts bounded by
    /// Rule 4: `n log2(x_(p+1)) + (x_p / x_(p+1)) log2(x_p)`.
    pub rule2: Vec<f64>,
}

/// Numeric value of every rule at `(n, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleBounds {
    pub n: u64,
    pub k: u64,
    /// Rule 1 with `D` bounded by Rules 3 and 4:
    /// `n + min(n, isqrt(k)) * ceil(log2 k)`.
    pub rule1: u128,
    /// Longest list of distinct odd values summing to at most `k`.
    pub rule3_cap: u64,
    /// Same without alignment: distinct positive values.
    pub rule3_cap_unaligned: u64,
    /// `n * ceil(log2 k)`.
    pub rule4: u128,
    /// One entry per `j` in `2..=log2(k)`.
    pub theorem: Vec<TheoremChain>,
}

pub fn rule_bounds(n: u64, k: u64) -> Result<RuleBounds> {
    check_nk(n, k)?;
    let lg = u128::from(ceil_log2(k));
    let rule3_cap = max_diff_count(k, true);
    let theorem = (2..=k.ilog2()).map(|j| theorem_chain(n, k, j)).collect();
    Ok(RuleBounds {
        n,
        k,
        rule1: u128::from(n) + u128::from(n.min(rule3_cap)) * lg,
        rule3_cap,
        rule3_cap_unaligned: max_diff_count(k, false),
        rule4: u128::from(n) * lg,
        theorem,
    })
}

fn theorem_chain(n: u64, k: u64, j: u32) -> TheoremChain {
    let kf = k as f64;
    let lg = libm::log2(kf);
    let jf = f64::from(j);
    let root = kpow(k, 1, j);
    let x: Vec<f64> = (0..j - 1).map(|p| kpow(k, j - p, j)).collect();
    let terms = (0..j - 1).map(|p| root * lg * f64::from(j - p) / jf).collect();
    let rule2 = x.windows(2).map(|w| n as f64 * libm::log2(w[1]) + w[0] / w[1] * libm::log2(w[0])).collect();
    let first_term = f64::from(j + 1) / 2.0 * root * lg;
    let linear_term = f64::from(j - 1) * n as f64;
    TheoremChain { j, x, terms, first_term, linear_term, bound: first_term + linear_term, rule2 }
}

// k^(num/den), exact for powers of two whenever the exponent is.
fn kpow(k: u64, num: u32, den: u32) -> f64 {
    if k.is_power_of_two() {
        let b = f64::from(k.trailing_zeros());
        libm::exp2(b * f64::from(num) / f64::from(den))
    } else {
        libm::pow(k as f64, f64::from(num) / f64::from(den))
    }
}

/// `[1, 2, 3, 5, 8, ...]`: distinct Fibonacci numbers, each the sum of the
/// two before it, so one round of differencing only removes the top two.
pub fn fibonacci(n: usize) -> Result<Vec<u32>> {
    let mut out = Vec::with_capacity(n);
    let (mut a, mut b) = (1u64, 2u64);
    for _ in 0..n {
        let v = u32::try_from(a).map_err(|_| Error::InvalidParameter("fibonacci value exceeds 32 bits"))?;
        out.push(v);
        (a, b) = (b, a + b);
    }
    Ok(out)
}

/// `[1, 2, 4, ..., 2^(n-1)]`.
pub fn powers_of_two(n: usize) -> Result<Vec<u32>> {
    if n > 32 {
        return Err(Error::InvalidParameter("powers of two exceed 32 bits"));
    }
    Ok((0..n).map(|i| 1u32 << i).collect())
}
