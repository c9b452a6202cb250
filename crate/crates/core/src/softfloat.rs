//! Binary floating point with configurable mantissa width.
//!
//! Only mantissas are multiplied, and they go through the same addition-only
//! outer-product pipeline as integers; exponents are added. Each result cell
//! is summed exactly and rounded once, to nearest with ties to even.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, Sign};
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::matmul::{outer_product, ChainSide, MatmulConfig, MatmulStats, Product};
use crate::opcount::OpCounter;
use crate::scalarmul::Machine;

/// Exponent range of [`SoftFloat`], applied to the exponent of the mantissa's
/// least significant bit.
pub const MIN_EXPONENT: i64 = -(1 << 24);
pub const MAX_EXPONENT: i64 = 1 << 24;

pub const DEFAULT_MANTISSA_BITS: u32 = 12;

/// `(-1)^negative * mantissa * 2^exponent`, with `mantissa` either zero or
/// normalized to exactly `m` bits (leading one included).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SoftFloat {
    pub negative: bool,
    pub exponent: i32,
    pub mantissa: u32,
}

pub(crate) fn check_mantissa_bits(m: u32) -> Result<()> {
    if m == 0 || m > crate::MAX_BITS {
        Err(Error::InvalidMantissaBits(m))
    } else {
        Ok(())
    }
}

fn check_exponent(e: i64) -> Result<i32> {
    if (MIN_EXPONENT..=MAX_EXPONENT).contains(&e) {
        Ok(e as i32)
    } else {
        Err(Error::ExponentOverflow(e))
    }
}

impl SoftFloat {
    pub const ZERO: SoftFloat = SoftFloat { negative: false, exponent: 0, mantissa: 0 };

    /// Checked constructor for an already normalized triple.
    pub fn new(negative: bool, exponent: i64, mantissa: u64, m: u32) -> Result<Self> {
        check_mantissa_bits(m)?;
        if mantissa == 0 {
            return Ok(SoftFloat::ZERO);
        }
        if mantissa >> (m - 1) != 1 {
            return Err(Error::UnnormalizedMantissa { mantissa, bits: m });
        }
        Ok(SoftFloat { negative, exponent: check_exponent(exponent)?, mantissa: mantissa as u32 })
    }

    pub fn one(m: u32) -> Result<Self> {
        SoftFloat::new(false, -(i64::from(m) - 1), 1 << (m - 1), m)
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0
    }

    /// Round `±magnitude * 2^exponent` to `m` bits, ties to even.
    pub fn round(negative: bool, magnitude: u128, exponent: i64, m: u32) -> Result<Self> {
        round_big(&BigInt::from_biguint(if negative { Sign::Minus } else { Sign::Plus }, magnitude.into()), exponent, m)
    }

    /// Round `value * 2^exponent` to `m` bits, ties to even.
    pub fn round_bigint(value: &BigInt, exponent: i64, m: u32) -> Result<Self> {
        round_big(value, exponent, m)
    }

    /// Nearest value to `x`, ties to even. Non-finite input is rejected.
    pub fn from_f64(x: f64, m: u32) -> Result<Self> {
        check_mantissa_bits(m)?;
        if !x.is_finite() {
            return Err(Error::InvalidParameter("non-finite float"));
        }
        if x == 0.0 {
            return Ok(SoftFloat::ZERO);
        }
        let bits = x.to_bits();
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1 << 52) - 1);
        let (mag, exp) = if raw_exp == 0 { (frac, -1074) } else { (frac | 1 << 52, raw_exp - 1075) };
        SoftFloat::round(x < 0.0, mag.into(), exp, m)
    }

    /// Nearest `f64`; exact whenever the value is representable.
    pub fn to_f64(&self) -> f64 {
        let v = libm::ldexp(f64::from(self.mantissa), self.exponent);
        if self.negative {
            -v
        } else {
            v
        }
    }

    /// Product of two values: mantissas multiplied by shift-and-add,
    /// exponents added, one rounding.
    pub fn mul(self, rhs: SoftFloat, m: u32, counter: &mut OpCounter) -> Result<Self> {
        if self.is_zero() || rhs.is_zero() {
            return Ok(SoftFloat::ZERO);
        }
        let product = Machine::new(m, counter)?.russian_peasants(self.mantissa.into(), rhs.mantissa.into())?;
        let exponent = i64::from(self.exponent) + i64::from(rhs.exponent);
        SoftFloat::round(self.negative ^ rhs.negative, product.into(), exponent, m)
    }
}

fn round_big(value: &BigInt, exponent: i64, m: u32) -> Result<SoftFloat> {
    check_mantissa_bits(m)?;
    if value.is_zero() {
        return Ok(SoftFloat::ZERO);
    }
    let negative = value.is_negative();
    let mag = value.magnitude();
    let len = mag.bits();
    let m64 = u64::from(m);
    if len <= m64 {
        let mantissa: u64 = (mag << (m64 - len)).try_into().expect("fits in m bits");
        return SoftFloat::new(negative, exponent - (m64 - len) as i64, mantissa, m);
    }
    let drop = len - m64;
    let mut q: u64 = (mag >> drop).try_into().expect("fits in m bits");
    let half_bit = mag.bit(drop - 1);
    let sticky = mag.trailing_zeros().is_some_and(|tz| tz < drop - 1);
    if half_bit && (sticky || q & 1 == 1) {
        q += 1;
    }
    let mut exp = exponent + drop as i64;
    if q >> m != 0 {
        q >>= 1;
        exp += 1;
    }
    SoftFloat::new(negative, exp, q, m)
}

/// Exact running sum of `±integer * 2^exponent` terms.
#[derive(Debug, Clone)]
enum ExactSum {
    Empty,
    Small { value: i128, exponent: i64 },
    Big { value: BigInt, exponent: i64 },
}

impl ExactSum {
    fn add(&mut self, term: i128, exponent: i64) {
        *self = match core::mem::replace(self, ExactSum::Empty) {
            ExactSum::Empty => ExactSum::Small { value: term, exponent },
            ExactSum::Small { value, exponent: base } => {
                let lo = base.min(exponent);
                let widen = |v: i128, e: i64| -> Option<i128> {
                    let by = u32::try_from(e - lo).ok().filter(|&b| b < 127)?;
                    let out = v.checked_shl(by)?;
                    (out >> by == v).then_some(out)
                };
                match (widen(value, base), widen(term, exponent)) {
                    (Some(a), Some(b)) if a.checked_add(b).is_some() => ExactSum::Small { value: a + b, exponent: lo },
                    _ => {
                        let mut big = ExactSum::Big { value: BigInt::from(value), exponent: base };
                        big.add(term, exponent);
                        big
                    }
                }
            }
            ExactSum::Big { value, exponent: base } => {
                let lo = base.min(exponent);
                let a = value << (base - lo) as usize;
                let b = BigInt::from(term) << (exponent - lo) as usize;
                ExactSum::Big { value: a + b, exponent: lo }
            }
        };
    }

    fn round(&self, m: u32) -> Result<SoftFloat> {
        match self {
            ExactSum::Empty => Ok(SoftFloat::ZERO),
            ExactSum::Small { value, exponent } => round_big(&BigInt::from(*value), *exponent, m),
            ExactSum::Big { value, exponent } => round_big(value, *exponent, m),
        }
    }
}

/// Row-major matrix of [`SoftFloat`] sharing one mantissa width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FloatMatrix {
    rows: usize,
    cols: usize,
    mantissa_bits: u32,
    data: Vec<SoftFloat>,
}

impl FloatMatrix {
    pub fn new(rows: usize, cols: usize, mantissa_bits: u32, data: Vec<SoftFloat>) -> Result<Self> {
        check_mantissa_bits(mantissa_bits)?;
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch { expected: rows * cols, actual: data.len() });
        }
        for x in &data {
            SoftFloat::new(x.negative, x.exponent.into(), x.mantissa.into(), mantissa_bits)?;
        }
        Ok(FloatMatrix { rows, cols, mantissa_bits, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn mantissa_bits(&self) -> u32 {
        self.mantissa_bits
    }

    pub fn data(&self) -> &[SoftFloat] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> SoftFloat {
        self.data[i * self.cols + j]
    }
}

fn signed_mantissa(x: &SoftFloat) -> i64 {
    let m = i64::from(x.mantissa);
    if x.negative {
        -m
    } else {
        m
    }
}

/// `A * B` over soft floats.
pub fn matmul_softfloat(a: &FloatMatrix, b: &FloatMatrix, config: &MatmulConfig) -> Result<Product<FloatMatrix>> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch("A.cols must equal B.rows"));
    }
    if a.mantissa_bits != b.mantissa_bits {
        return Err(Error::DimensionMismatch("operands have different mantissa widths"));
    }
    let m_bits = a.mantissa_bits;
    let (n, m) = (a.rows, b.cols);
    let columns = match config.side {
        ChainSide::Auto => n > m,
        ChainSide::Columns => true,
        ChainSide::Rows => false,
    };
    let mut sums = vec![ExactSum::Empty; n * m];
    let mut counter = OpCounter::new();
    let mut stats = MatmulStats::default();
    for k in 0..a.cols {
        let col: Vec<SoftFloat> = (0..n).map(|i| a.get(i, k)).collect();
        let row = &b.data[k * m..(k + 1) * m];
        let col_m: Vec<i64> = col.iter().map(signed_mantissa).collect();
        let row_m: Vec<i64> = row.iter().map(signed_mantissa).collect();
        let mut add = |i: usize, j: usize, term: i128| {
            let e = i64::from(col[i].exponent) + i64::from(row[j].exponent);
            sums[i * m + j].add(term, e);
        };
        if columns {
            outer_product(&col_m, &row_m, m_bits, &config.chain, &mut counter, &mut stats, &mut add)?;
        } else {
            outer_product(&row_m, &col_m, m_bits, &config.chain, &mut counter, &mut stats, |j, i, t| add(i, j, t))?;
        }
    }
    let data = sums.iter().map(|s| s.round(m_bits)).collect::<Result<Vec<_>>>()?;
    Ok(Product { matrix: FloatMatrix { rows: n, cols: m, mantissa_bits: m_bits, data }, counter, stats })
}

/// Reference product: native mantissa multiplies, the same exact per-cell
/// sum and single rounding.
pub fn matmul_softfloat_naive(a: &FloatMatrix, b: &FloatMatrix) -> Result<FloatMatrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch("A.cols must equal B.rows"));
    }
    if a.mantissa_bits != b.mantissa_bits {
        return Err(Error::DimensionMismatch("operands have different mantissa widths"));
    }
    let (n, m) = (a.rows, b.cols);
    let mut data = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            let mut sum = ExactSum::Empty;
            for k in 0..a.cols {
                let (x, y) = (a.get(i, k), b.get(k, j));
                if !x.is_zero() && !y.is_zero() {
                    let term = i128::from(signed_mantissa(&x)) * i128::from(signed_mantissa(&y));
                    sum.add(term, i64::from(x.exponent) + i64::from(y.exponent));
                }
            }
            data.push(sum.round(a.mantissa_bits)?);
        }
    }
    Ok(FloatMatrix { rows: n, cols: m, mantissa_bits: a.mantissa_bits, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sf(x: f64, m: u32) -> SoftFloat {
        SoftFloat::from_f64(x, m).unwrap()
    }

    #[test]
    fn normalization_is_enforced() {
        assert!(SoftFloat::new(false, 0, 4, 3).is_ok());
        assert!(SoftFloat::new(false, 0, 3, 3).is_err());
        assert!(SoftFloat::new(false, 0, 8, 3).is_err());
        assert!(SoftFloat::new(false, MAX_EXPONENT + 1, 4, 3).is_err());
        assert_eq!(SoftFloat::new(true, 99, 0, 3).unwrap(), SoftFloat::ZERO);
        assert!(SoftFloat::new(false, 0, 1, 0).is_err());
    }

    #[test]
    fn rounding_ties_to_even() {
        // 2 bits: 9 = 1001b -> 10|01 rounds down to 8, 11 = 1011b -> 12, 10 = 1010b tie -> 8, 14 tie -> 16
        let r = |v: u128| SoftFloat::round(false, v, 0, 2).unwrap().to_f64();
        assert_eq!(r(9), 8.0);
        assert_eq!(r(11), 12.0);
        assert_eq!(r(10), 8.0);
        assert_eq!(r(14), 16.0);
        assert_eq!(r(15), 16.0);
        assert_eq!(r(3), 3.0);
        assert_eq!(r(1), 1.0);
    }

    #[test]
    fn f64_round_trip() {
        for x in [1.0, -0.375, 1.5, 3.0e-5, 1234.0, -7.0] {
            assert_eq!(sf(x, 24).to_f64(), x as f32 as f64);
        }
        assert!(SoftFloat::from_f64(f64::NAN, 8).is_err());
        assert_eq!(sf(0.0, 8), SoftFloat::ZERO);
    }

    #[test]
    fn scalar_products() {
        // 2.25 = 10.01b needs four significant bits; three round it to 2
        let mut c = OpCounter::new();
        assert_eq!(sf(1.5, 4).mul(sf(1.5, 4), 4, &mut c).unwrap().to_f64(), 2.25);
        assert_eq!(sf(1.5, 3).mul(sf(1.5, 3), 3, &mut c).unwrap().to_f64(), 2.0);
        let one = SoftFloat::one(12).unwrap();
        assert_eq!(one.to_f64(), 1.0);
        let x = sf(-3.140625, 12);
        assert_eq!(x.mul(one, 12, &mut c).unwrap(), x);
        assert!(SoftFloat::new(false, MAX_EXPONENT, 4, 3).unwrap().mul(sf(4.0, 3), 3, &mut c).is_err());
    }

    #[test]
    fn identity_product_is_exact() {
        let m = 12;
        let one = SoftFloat::one(m).unwrap();
        let id = FloatMatrix::new(2, 2, m, vec![one, SoftFloat::ZERO, SoftFloat::ZERO, one]).unwrap();
        let a = FloatMatrix::new(2, 2, m, vec![sf(1.5, m), sf(-2.75, m), sf(1e-3, m), sf(4096.0, m)]).unwrap();
        let p = matmul_softfloat(&id, &a, &MatmulConfig::default()).unwrap();
        assert_eq!(p.matrix, a);
    }

    #[test]
    fn exact_sum_then_single_rounding() {
        // 1 + 2^-20 - 1 with m = 4 is 2^-20 exactly when summed before rounding
        let m = 4;
        let a = FloatMatrix::new(1, 3, m, vec![sf(1.0, m), sf(1.0, m), sf(-1.0, m)]).unwrap();
        let b = FloatMatrix::new(3, 1, m, vec![sf(1.0, m), sf(libm::ldexp(1.0, -20), m), sf(1.0, m)]).unwrap();
        let p = matmul_softfloat(&a, &b, &MatmulConfig::default()).unwrap();
        assert_eq!(p.matrix.get(0, 0).to_f64(), libm::ldexp(1.0, -20));
        assert_eq!(matmul_softfloat_naive(&a, &b).unwrap(), p.matrix);
    }

    #[test]
    fn wide_exponent_spread_promotes() {
        let mut s = ExactSum::Empty;
        s.add(3, 1000);
        s.add(-1, -1000);
        assert!(matches!(s, ExactSum::Big { .. }));
        // 3 * 2^1000 dominates; the tiny negative term only breaks the tie
        let r = s.round(1).unwrap();
        assert_eq!((r.negative, r.mantissa, r.exponent), (false, 1, 1001));
    }

    #[test]
    fn mismatched_operands() {
        let a = FloatMatrix::new(1, 1, 4, vec![sf(1.0, 4)]).unwrap();
        let b = FloatMatrix::new(1, 1, 5, vec![sf(1.0, 5)]).unwrap();
        assert!(matmul_softfloat(&a, &b, &MatmulConfig::default()).is_err());
    }
}
