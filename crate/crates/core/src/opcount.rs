//! Operation counting.
//!
//! Only two categories feed the additions-per-multiplication ratio:
//! chain accumulation and the Russian-Peasants base case. Result-matrix
//! accumulation is needed by every matrix-multiplication algorithm and
//! sorting/differencing work is quadratic rather than cubic overall, so both
//! are tallied for diagnostics but kept out of the ratio.

use core::fmt;
use core::ops::{Add, AddAssign};

use crate::error::{Error, Result};

/// Where a shift-and-add is attributed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AddCategory {
    /// Step-4 prefix accumulation at any chain level.
    Accumulate,
    /// Shift-and-add inside a Russian-Peasants base case.
    BaseCase,
    /// Summing outer-product terms into the result matrix.
    OutputAccumulate,
}

/// Tallies of every counted operation of a computation.
///
/// Counters are plain values: give each task its own and [`merge`](Self::merge)
/// them at the join.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct OpCounter {
    pub accumulate_adds: u64,
    pub base_case_adds: u64,
    pub copies: u64,
    pub shifts: u64,
    pub bookkeeping_ops: u64,
    pub output_accumulate_adds: u64,
}

/// Field names in serialization order, shared by the CSV and key:value forms.
pub const COUNTER_FIELDS: [&str; 6] =
    ["accumulate_adds", "base_case_adds", "copies", "shifts", "bookkeeping_ops", "output_accumulate_adds"];

impl OpCounter {
    pub const fn new() -> Self {
        OpCounter {
            accumulate_adds: 0,
            base_case_adds: 0,
            copies: 0,
            shifts: 0,
            bookkeeping_ops: 0,
            output_accumulate_adds: 0,
        }
    }

    /// Fieldwise sum.
    ///
    /// # Panics
    ///
    /// If any field overflows `u64`; no real workload gets near that.
    #[must_use]
    pub fn merge(self, other: OpCounter) -> OpCounter {
        fn sum(a: u64, b: u64) -> u64 {
            a.checked_add(b).expect("operation counter overflowed u64")
        }
        OpCounter {
            accumulate_adds: sum(self.accumulate_adds, other.accumulate_adds),
            base_case_adds: sum(self.base_case_adds, other.base_case_adds),
            copies: sum(self.copies, other.copies),
            shifts: sum(self.shifts, other.shifts),
            bookkeeping_ops: sum(self.bookkeeping_ops, other.bookkeeping_ops),
            output_accumulate_adds: sum(self.output_accumulate_adds, other.output_accumulate_adds),
        }
    }

    /// Additions that stand in for multiplications.
    pub fn ratio_additions(&self) -> u64 {
        self.accumulate_adds + self.base_case_adds
    }

    pub(crate) fn record_add(&mut self, category: AddCategory) {
        let slot = match category {
            AddCategory::Accumulate => &mut self.accumulate_adds,
            AddCategory::BaseCase => &mut self.base_case_adds,
            AddCategory::OutputAccumulate => &mut self.output_accumulate_adds,
        };
        *slot += 1;
    }

    pub(crate) fn record_copy(&mut self) {
        self.copies += 1;
    }

    pub(crate) fn record_shift(&mut self) {
        self.shifts += 1;
    }

    pub(crate) fn record_bookkeeping(&mut self, ops: u64) {
        self.bookkeeping_ops += ops;
    }

    /// Values in [`COUNTER_FIELDS`] order.
    pub fn fields(&self) -> [u64; 6] {
        [
            self.accumulate_adds,
            self.base_case_adds,
            self.copies,
            self.shifts,
            self.bookkeeping_ops,
            self.output_accumulate_adds,
        ]
    }
}

impl Add for OpCounter {
    type Output = OpCounter;

    fn add(self, rhs: OpCounter) -> OpCounter {
        self.merge(rhs)
    }
}

impl AddAssign for OpCounter {
    fn add_assign(&mut self, rhs: OpCounter) {
        *self = self.merge(rhs);
    }
}

impl core::iter::Sum for OpCounter {
    fn sum<I: Iterator<Item = OpCounter>>(iter: I) -> OpCounter {
        iter.fold(OpCounter::new(), OpCounter::merge)
    }
}

/// Flat `key: value` block, one field per line.
impl fmt::Display for OpCounter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, value) in COUNTER_FIELDS.iter().zip(self.fields()) {
            writeln!(f, "{name}: {value}")?;
        }
        Ok(())
    }
}

/// Ratio-relevant additions divided by the number of scalar products they
/// replace.
pub fn additions_per_multiplication(counter: &OpCounter, n_products: u64) -> Result<f64> {
    if n_products == 0 {
        return Err(Error::NoProducts);
    }
    Ok(counter.ratio_additions() as f64 / n_products as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_counter() -> impl Strategy<Value = OpCounter> {
        proptest::array::uniform6(0u64..1 << 40).prop_map(|f| OpCounter {
            accumulate_adds: f[0],
            base_case_adds: f[1],
            copies: f[2],
            shifts: f[3],
            bookkeeping_ops: f[4],
            output_accumulate_adds: f[5],
        })
    }

    #[test]
    fn merge_of_zeros_is_zero() {
        assert_eq!(OpCounter::new().merge(OpCounter::new()), OpCounter::default());
    }

    #[test]
    fn merge_is_fieldwise() {
        let a = OpCounter { accumulate_adds: 3, ..Default::default() };
        let b = OpCounter { accumulate_adds: 4, ..Default::default() };
        assert_eq!(a.merge(b), OpCounter { accumulate_adds: 7, ..Default::default() });
    }

    #[test]
    #[should_panic(expected = "overflowed")]
    fn merge_overflow_is_fatal() {
        let a = OpCounter { copies: u64::MAX, ..Default::default() };
        let _ = a.merge(OpCounter { copies: 1, ..Default::default() });
    }

    #[test]
    fn ratio_arithmetic() {
        let c = OpCounter { accumulate_adds: 1000, base_case_adds: 90, ..Default::default() };
        let r = additions_per_multiplication(&c, 1000).unwrap();
        assert!((r - 1.09).abs() < 1e-12);
    }

    #[test]
    fn ratio_excludes_output_and_bookkeeping() {
        let c = OpCounter { output_accumulate_adds: 500, bookkeeping_ops: 900, copies: 10, ..Default::default() };
        assert_eq!(additions_per_multiplication(&c, 10).unwrap(), 0.0);
    }

    #[test]
    fn ratio_needs_products() {
        assert_eq!(additions_per_multiplication(&OpCounter::new(), 0), Err(Error::NoProducts));
    }

    #[test]
    fn key_value_block() {
        let c = OpCounter { shifts: 2, ..Default::default() };
        let text = alloc::format!("{c}");
        assert!(text.starts_with("accumulate_adds: 0\n"));
        assert!(text.contains("shifts: 2\n"));
        assert_eq!(text.lines().count(), 6);
    }

    proptest! {
        #[test]
        fn merge_commutes_and_associates(a in arb_counter(), b in arb_counter(), c in arb_counter()) {
            prop_assert_eq!(a.merge(b), b.merge(a));
            prop_assert_eq!(a.merge(b).merge(c), a.merge(b.merge(c)));
        }
    }
}
