//! Scalar-times-vector evaluation over a prebuilt [`DiffChain`].
//!
//! Work flows bottom-up: the base differences are multiplied by Russian
//! Peasants, then each level turns `c * differences` into `c * sorted` by
//! prefix accumulation and `c * sorted` into `c * input` by following
//! pointers. Shifts recorded by alignment are folded into the next
//! shift-and-add wherever there is one.

use alloc::vec;
use alloc::vec::Vec;

use crate::chain::{check_bits, ChainLevel, DiffChain};
use crate::error::{Error, Result};
use crate::opcount::{AddCategory, OpCounter};

/// `c * v` for every element of a vector, zeros included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductVector {
    pub values: Vec<u64>,
    /// Accumulator width in bits, twice the element width.
    pub width: u32,
}

/// The shift-and-add machine: a `b`-bit word size and a counter every
/// primitive reports to.
#[derive(Debug)]
pub struct Machine<'a> {
    bits: u32,
    counter: &'a mut OpCounter,
}

impl<'a> Machine<'a> {
    pub fn new(bits: u32, counter: &'a mut OpCounter) -> Result<Self> {
        check_bits(bits)?;
        Ok(Machine { bits, counter })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn counter(&self) -> &OpCounter {
        self.counter
    }

    fn width(&self) -> u32 {
        2 * self.bits
    }

    fn fits(&self, v: u128) -> bool {
        v >> self.width() == 0
    }

    /// `x + y * 2^shift`, counted once under `category`.
    pub fn shift_add(&mut self, x: u64, y: u64, shift: u32, category: AddCategory) -> Result<u64> {
        if shift >= self.bits {
            return Err(Error::ShiftTooLarge { shift, bits: self.bits });
        }
        let sum = u128::from(x) + (u128::from(y) << shift);
        if !self.fits(sum) {
            return Err(Error::AccumulatorOverflow { width: self.width() });
        }
        self.counter.record_add(category);
        Ok(sum as u64)
    }

    fn copy(&mut self, v: u64) -> u64 {
        self.counter.record_copy();
        v
    }

    /// Standalone left shift, counted only when it moves anything.
    fn shift(&mut self, v: u64, by: u8) -> Result<u64> {
        if by == 0 {
            return Ok(v);
        }
        let out = u128::from(v) << by;
        if !self.fits(out) {
            return Err(Error::AccumulatorOverflow { width: self.width() });
        }
        self.counter.record_shift();
        Ok(out as u64)
    }

    /// `c * y` with one shift-and-add per set bit of `c`.
    pub fn russian_peasants(&mut self, c: u64, y: u64) -> Result<u64> {
        for v in [c, y] {
            if v >> self.bits != 0 {
                return Err(Error::ValueOutOfRange { value: v.into(), bits: self.bits });
            }
        }
        let mut x = 0;
        let mut rest = c;
        while rest != 0 {
            let i = rest.trailing_zeros();
            x = self.shift_add(x, y, i, AddCategory::BaseCase)?;
            rest &= rest - 1;
        }
        Ok(x)
    }

    /// Turn `c * differences` into `c * sorted_unique`, one segment at a time.
    ///
    /// `diff_shifts[i]` is how far difference `i` was right-shifted when the
    /// next level aligned it; the shift is put back inside the addition. Each
    /// segment costs its length minus one additions; its first element is a
    /// copy.
    pub fn accumulate(&mut self, c_diffs: &[u64], level: &ChainLevel, diff_shifts: Option<&[u8]>) -> Result<Vec<u64>> {
        if c_diffs.len() != level.len() {
            return Err(Error::LengthMismatch { expected: level.len(), actual: c_diffs.len() });
        }
        if let Some(h) = diff_shifts {
            if h.len() != level.len() {
                return Err(Error::LengthMismatch { expected: level.len(), actual: h.len() });
            }
        }
        let shift_of = |i: usize| diff_shifts.map_or(0, |h| h[i]);

        let mut out = vec![0u64; c_diffs.len()];
        for seg in level.segments() {
            if seg.is_empty() {
                continue;
            }
            let first = self.copy(c_diffs[seg.start]);
            out[seg.start] = self.shift(first, shift_of(seg.start))?;
            for i in seg.start + 1..seg.end {
                out[i] = self.shift_add(out[i - 1], c_diffs[i], shift_of(i).into(), AddCategory::Accumulate)?;
            }
        }
        Ok(out)
    }

    /// Copy `c * sorted_unique[pointers[i]]` out to every input position.
    ///
    /// With `apply_shifts` each copy is also shifted back by the level's
    /// alignment shift; otherwise the caller folds that shift into its own
    /// shift-and-add.
    pub fn follow_pointers(&mut self, c_sorted: &[u64], level: &ChainLevel, apply_shifts: bool) -> Result<Vec<u64>> {
        if c_sorted.len() != level.len() {
            return Err(Error::LengthMismatch { expected: level.len(), actual: c_sorted.len() });
        }
        level
            .pointers
            .iter()
            .zip(&level.shifts)
            .enumerate()
            .map(|(index, (&pointer, &h))| {
                let v =
                    *c_sorted.get(pointer).ok_or(Error::PointerOutOfRange { index, pointer, len: c_sorted.len() })?;
                let v = self.copy(v);
                if apply_shifts {
                    self.shift(v, h)
                } else {
                    Ok(v)
                }
            })
            .collect()
    }

    /// Prefix sums split into about `sqrt(n)` segments: scan each segment,
    /// scan the segment totals, then add each segment's offset. Needs at most
    /// `2n + sqrt(n)` additions instead of `n - 1`, but every phase is
    /// parallel across segments.
    pub fn segmented_accumulate(&mut self, c_diffs: &[u64]) -> Result<Vec<u64>> {
        let n = c_diffs.len();
        if n <= 1 {
            return Ok(c_diffs.to_vec());
        }
        let groups = n.isqrt() + usize::from(n.isqrt() * n.isqrt() < n);
        let size = n.div_ceil(groups);

        let mut out = c_diffs.to_vec();
        for seg in out.chunks_mut(size) {
            for i in 1..seg.len() {
                seg[i] = self.shift_add(seg[i - 1], seg[i], 0, AddCategory::Accumulate)?;
            }
        }

        let totals: Vec<u64> = out.chunks(size).map(|s| s[s.len() - 1]).collect();
        let mut offsets = Vec::with_capacity(totals.len());
        offsets.push(0);
        for (s, &t) in totals.iter().enumerate().take(totals.len() - 1) {
            let next = if s == 0 { self.copy(t) } else { self.shift_add(offsets[s], t, 0, AddCategory::Accumulate)? };
            offsets.push(next);
        }

        for (seg, &offset) in out.chunks_mut(size).zip(&offsets).skip(1) {
            for v in seg {
                *v = self.shift_add(*v, offset, 0, AddCategory::Accumulate)?;
            }
        }
        Ok(out)
    }

    /// `c * v` for every retained (nonzero) element of the chain's vector,
    /// in retained order. With `top_shifts == false` the top level's
    /// alignment shifts are left for the caller to apply.
    pub(crate) fn evaluate(&mut self, chain: &DiffChain, c: u64, top_shifts: bool) -> Result<Vec<u64>> {
        if chain.is_degenerate() {
            return Ok(Vec::new());
        }
        let mut c_vals = Vec::with_capacity(chain.base.len());
        for &d in &chain.base {
            let v = if d == 1 { self.copy(c) } else { self.russian_peasants(d.into(), c)? };
            c_vals.push(v);
        }
        let depth = chain.levels.len();
        for l in (0..depth).rev() {
            let level = &chain.levels[l];
            let diff_shifts = chain.levels.get(l + 1).map(|next| &next.shifts[..]);
            let c_sorted = self.accumulate(&c_vals, level, diff_shifts)?;
            c_vals = self.follow_pointers(&c_sorted, level, l == 0 && top_shifts)?;
        }
        Ok(c_vals)
    }
}

/// `c * v` for the vector `chain` was built from.
pub fn multiply_chain(chain: &DiffChain, c: u64, counter: &mut OpCounter) -> Result<ProductVector> {
    let mut machine = Machine::new(chain.bits(), counter)?;
    if c >> chain.bits() != 0 {
        return Err(Error::ValueOutOfRange { value: c.into(), bits: chain.bits() });
    }
    let mut values = vec![0u64; chain.len()];
    if c != 0 {
        let retained = machine.evaluate(chain, c, true)?;
        for (&pos, v) in chain.positions().iter().zip(retained) {
            values[pos] = v;
        }
    }
    Ok(ProductVector { values, width: 2 * chain.bits() })
}
