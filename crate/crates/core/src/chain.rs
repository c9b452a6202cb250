//! Difference chains: the once-per-vector preprocessing.
//!
//! A level takes an input list, optionally aligns every element (strips
//! trailing zero bits), sorts and deduplicates, records where each input went
//! and how far it was shifted, and takes first differences of the sorted
//! list. The differences become the next level's input. Because the
//! differences of a sorted list sum to its largest element, each level's
//! values are far more constrained than the last and the lists shrink quickly.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::opcount::OpCounter;
use crate::MAX_BITS;

/// Knobs for [`build_chain`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainConfig {
    /// Strip trailing zero bits before sorting, at every level.
    pub align: bool,
    /// Number of contiguous segments the top-level differences are split into.
    /// Each segment is deduplicated and accumulated independently from then on.
    pub segments: usize,
    /// Stop once the difference list has at most this many elements.
    pub base_threshold: usize,
    /// Hard cap on the number of levels.
    pub max_depth: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig { align: true, segments: 1, base_threshold: 4, max_depth: 8 }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.segments == 0 {
            return Err(Error::InvalidParameter("segments must be at least 1"));
        }
        if self.max_depth == 0 {
            return Err(Error::InvalidParameter("max_depth must be at least 1"));
        }
        Ok(())
    }
}

/// A multiplicand vector with its zeros split off.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputVector {
    len: usize,
    bits: u32,
    values: Vec<u32>,
    positions: Vec<usize>,
    zero_positions: Vec<usize>,
    negative: Option<Vec<bool>>,
}

impl InputVector {
    /// Unsigned elements, each below `2^bits`.
    pub fn new(values: &[u32], bits: u32) -> Result<Self> {
        check_bits(bits)?;
        let mut v = InputVector::empty(values.len(), bits);
        for (i, &x) in values.iter().enumerate() {
            if u64::from(x) >> bits != 0 {
                return Err(Error::ValueOutOfRange { value: x.into(), bits });
            }
            v.push(i, x);
        }
        Ok(v)
    }

    /// Signed elements with `|x| < 2^bits`; signs are carried alongside the
    /// magnitudes.
    pub fn from_signed(values: &[i64], bits: u32) -> Result<Self> {
        check_bits(bits)?;
        let mut v = InputVector::empty(values.len(), bits);
        let mut negative = Vec::new();
        for (i, &x) in values.iter().enumerate() {
            let mag = x.unsigned_abs();
            if mag >> bits != 0 {
                return Err(Error::ValueOutOfRange { value: x.into(), bits });
            }
            if mag != 0 {
                negative.push(x < 0);
            }
            v.push(i, mag as u32);
        }
        v.negative = Some(negative);
        Ok(v)
    }

    fn empty(len: usize, bits: u32) -> Self {
        InputVector { len, bits, values: Vec::new(), positions: Vec::new(), zero_positions: Vec::new(), negative: None }
    }

    fn push(&mut self, index: usize, value: u32) {
        if value == 0 {
            self.zero_positions.push(index);
        } else {
            self.values.push(value);
            self.positions.push(index);
        }
    }

    /// Original length, zeros included.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// The nonzero values, in original order.
    pub fn values(&self) -> &[u32] {
        &self.values
    }

    /// Original index of each retained value.
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn zero_positions(&self) -> &[usize] {
        &self.zero_positions
    }

    /// Sign of each retained value, if built from signed input.
    pub fn negative(&self) -> Option<&[bool]> {
        self.negative.as_deref()
    }
}

pub(crate) fn check_bits(bits: u32) -> Result<()> {
    if bits == 0 || bits > MAX_BITS {
        Err(Error::InvalidBits(bits))
    } else {
        Ok(())
    }
}

/// One recursion level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainLevel {
    /// Sorted distinct (aligned) values. Strictly increasing within each
    /// segment.
    pub sorted_unique: Vec<u32>,
    /// For each input element, its index into `sorted_unique`.
    pub pointers: Vec<usize>,
    /// For each input element, how many bits alignment stripped.
    pub shifts: Vec<u8>,
    /// First differences of `sorted_unique`, restarting from zero at every
    /// segment start.
    pub differences: Vec<u32>,
    /// Segment boundaries over `sorted_unique`: `[0, .., len]`.
    pub segment_bounds: Vec<usize>,
}

impl ChainLevel {
    pub fn len(&self) -> usize {
        self.sorted_unique.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_unique.is_empty()
    }

    pub fn segment_count(&self) -> usize {
        self.segment_bounds.len() - 1
    }

    /// Iterator over the `[start, end)` index ranges of the segments.
    pub fn segments(&self) -> impl Iterator<Item = core::ops::Range<usize>> + '_ {
        self.segment_bounds.windows(2).map(|w| w[0]..w[1])
    }
}

/// Preprocessed form of one vector, reusable for any number of scalars.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffChain {
    pub levels: Vec<ChainLevel>,
    /// Deepest difference list, multiplied by Russian Peasants.
    pub base: Vec<u32>,
    pub config: ChainConfig,
    len: usize,
    bits: u32,
    positions: Vec<usize>,
}

impl DiffChain {
    /// True when the input had no nonzero element.
    pub fn is_degenerate(&self) -> bool {
        self.levels.is_empty()
    }

    /// Length of the original vector.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Original index of each element of the top level's input.
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// Accumulate additions one scalar costs: `len - segments` summed over
    /// levels.
    pub fn accumulate_cost(&self) -> u64 {
        self.levels.iter().map(|l| (l.len() - l.segment_count()) as u64).sum()
    }

    /// Russian-Peasants additions one scalar costs on the base list. Base
    /// values equal to one are copies.
    pub fn base_cost(&self) -> u64 {
        self.base.iter().filter(|&&d| d != 1).map(|d| u64::from(d.count_ones())).sum()
    }
}

/// Strip trailing zero bits from every element.
pub fn align(values: &[u32]) -> Result<(Vec<u32>, Vec<u8>)> {
    let mut odd = Vec::with_capacity(values.len());
    let mut shifts = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        if v == 0 {
            return Err(Error::ZeroValue(i));
        }
        let tz = v.trailing_zeros();
        odd.push(v >> tz);
        shifts.push(tz as u8);
    }
    Ok((odd, shifts))
}

/// Sort and deduplicate, returning the distinct values and a 0-based pointer
/// from every input element to its distinct value.
pub fn sort_dedup(values: &[u32], counter: &mut OpCounter) -> (Vec<u32>, Vec<usize>) {
    let mut comparisons = 0u64;
    // value in the high half, original index in the low half
    let mut keyed: Vec<u64> = values.iter().enumerate().map(|(i, &v)| (u64::from(v) << 32) | i as u64).collect();
    keyed.sort_unstable_by(|a, b| {
        comparisons += 1;
        (a >> 32).cmp(&(b >> 32))
    });

    let mut sorted = Vec::new();
    let mut pointers = vec![0usize; values.len()];
    for (n, &k) in keyed.iter().enumerate() {
        let v = (k >> 32) as u32;
        if n > 0 {
            comparisons += 1;
        }
        if sorted.last() != Some(&v) {
            sorted.push(v);
        }
        pointers[(k & 0xffff_ffff) as usize] = sorted.len() - 1;
    }
    counter.record_bookkeeping(comparisons);
    (sorted, pointers)
}

/// First differences with an implicit leading zero.
pub fn differences(sorted_unique: &[u32], counter: &mut OpCounter) -> Result<Vec<u32>> {
    let mut out = Vec::with_capacity(sorted_unique.len());
    let mut prev = 0u32;
    for (i, &s) in sorted_unique.iter().enumerate() {
        if s <= prev && !(i == 0 && s > 0) {
            return Err(Error::NotIncreasing(i));
        }
        out.push(s - prev);
        prev = s;
    }
    counter.record_bookkeeping(out.len().saturating_sub(1) as u64);
    Ok(out)
}

/// Longest list of distinct positive integers (distinct odd integers when
/// `aligned`) whose sum stays within `k`.
pub fn max_diff_count(k: u64, aligned: bool) -> u64 {
    if aligned {
        k.isqrt()
    } else {
        // largest r with r(r+1)/2 <= k
        let disc = (8 * u128::from(k) + 1).isqrt();
        ((disc - 1) / 2) as u64
    }
}

/// Cut `len` positions into at most `parts` contiguous, near-equal pieces.
pub(crate) fn split_even(len: usize, parts: usize) -> Vec<usize> {
    let parts = parts.clamp(1, len.max(1));
    let (q, r) = (len / parts, len % parts);
    let mut bounds = Vec::with_capacity(parts + 1);
    let mut at = 0;
    bounds.push(0);
    for p in 0..parts {
        at += q + usize::from(p < r);
        bounds.push(at);
    }
    bounds
}

fn build_level(
    input: &[u32],
    input_bounds: &[usize],
    align_values: bool,
    counter: &mut OpCounter,
) -> Result<ChainLevel> {
    let (values, shifts) = if align_values {
        align(input)?
    } else {
        if let Some(i) = input.iter().position(|&v| v == 0) {
            return Err(Error::ZeroValue(i));
        }
        (input.to_vec(), vec![0; input.len()])
    };

    let mut level = ChainLevel {
        sorted_unique: Vec::new(),
        pointers: Vec::with_capacity(input.len()),
        shifts,
        differences: Vec::new(),
        segment_bounds: vec![0],
    };
    for w in input_bounds.windows(2) {
        let (sorted, pointers) = sort_dedup(&values[w[0]..w[1]], counter);
        let offset = level.sorted_unique.len();
        level.pointers.extend(pointers.into_iter().map(|p| p + offset));
        level.differences.extend(differences(&sorted, counter)?);
        level.sorted_unique.extend(sorted);
        level.segment_bounds.push(level.sorted_unique.len());
    }
    Ok(level)
}

/// Build the full chain for `v`.
///
/// The top level always has a single segment, so its differences are global
/// and sum to its largest value. With `segments > 1` those differences are
/// cut into contiguous pieces, and from the next level down every piece is
/// deduplicated and differenced on its own.
pub fn build_chain(v: &InputVector, config: ChainConfig, counter: &mut OpCounter) -> Result<DiffChain> {
    config.validate()?;
    let mut chain = DiffChain {
        levels: Vec::new(),
        base: Vec::new(),
        config,
        len: v.len(),
        bits: v.bits(),
        positions: v.positions().to_vec(),
    };
    if v.values().is_empty() {
        return Ok(chain);
    }

    let top = build_level(v.values(), &[0, v.values().len()], config.align, counter)?;
    chain.levels.push(top);
    loop {
        let last = chain.levels.last().expect("at least one level");
        let diffs = &last.differences;
        if diffs.len() <= config.base_threshold || chain.levels.len() >= config.max_depth {
            break;
        }
        let bounds = if chain.levels.len() == 1 {
            split_even(diffs.len(), config.segments)
        } else {
            last.segment_bounds.clone()
        };
        let next = build_level(diffs, &bounds, config.align, counter)?;
        if next.len() >= diffs.len() {
            break;
        }
        chain.levels.push(next);
    }
    chain.base = chain.levels.last().expect("at least one level").differences.clone();
    Ok(chain)
}
