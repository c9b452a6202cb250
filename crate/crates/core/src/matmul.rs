//! Matrix products as sums of outer products.
//!
//! For each `k`, column `k` of `A` and row `k` of `B` form an outer product.
//! The longer of the two becomes the chain vector and is preprocessed once;
//! the other supplies the scalars. Scalars are themselves deduplicated up to
//! sign and powers of two, so a chain is evaluated once per distinct odd
//! magnitude. Signs never enter the unsigned pipeline: they are reattached
//! when a term is added into the result.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::chain::{build_chain, check_bits, ChainConfig, InputVector};
use crate::error::{Error, Result};
use crate::opcount::{AddCategory, OpCounter};
use crate::scalarmul::Machine;

/// Smallest `b >= 1` with `|v| < 2^b` for every value.
pub(crate) fn required_bits<'a>(values: impl IntoIterator<Item = &'a i128>) -> u32 {
    let max = values.into_iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
    (128 - max.leading_zeros()).max(1)
}

fn check_value(v: i128, bits: u32) -> Result<()> {
    if bits < 128 && v.unsigned_abs() >> bits != 0 {
        Err(Error::ValueOutOfRange { value: v, bits })
    } else {
        Ok(())
    }
}

/// Row-major signed integer matrix with a declared element width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    bits: u32,
    data: Vec<i128>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, bits: u32, data: Vec<i128>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch { expected: rows * cols, actual: data.len() });
        }
        if bits == 0 || bits > 127 {
            return Err(Error::InvalidBits(bits));
        }
        for &v in &data {
            check_value(v, bits)?;
        }
        Ok(DenseMatrix { rows, cols, bits, data })
    }

    pub fn zeros(rows: usize, cols: usize, bits: u32) -> Self {
        DenseMatrix { rows, cols, bits: bits.max(1), data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n, 1);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn data(&self) -> &[i128] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> i128 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[i128] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> impl Iterator<Item = i128> + '_ {
        self.data.iter().skip(j).step_by(self.cols.max(1)).copied().take(self.rows)
    }

    pub fn to_sparse(&self) -> SparseTriples {
        let entries = (0..self.rows)
            .flat_map(|i| (0..self.cols).map(move |j| (i, j)))
            .filter(|&(i, j)| self.get(i, j) != 0)
            .map(|(i, j)| (i, j, self.get(i, j)))
            .collect();
        SparseTriples { rows: self.rows, cols: self.cols, bits: self.bits, entries }
    }
}

/// Coordinate-list matrix: `(row, col, value)` with every value nonzero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseTriples {
    rows: usize,
    cols: usize,
    bits: u32,
    entries: Vec<(usize, usize, i128)>,
}

impl SparseTriples {
    /// Validates ranges, nonzero values and uniqueness of coordinates.
    /// Entries are kept in row-major order.
    pub fn new(rows: usize, cols: usize, bits: u32, mut entries: Vec<(usize, usize, i128)>) -> Result<Self> {
        if bits == 0 || bits > 127 {
            return Err(Error::InvalidBits(bits));
        }
        for &(row, col, v) in &entries {
            if row >= rows || col >= cols {
                return Err(Error::IndexOutOfRange { row, col, rows, cols });
            }
            if v == 0 {
                return Err(Error::ExplicitZero { row, col });
            }
            check_value(v, bits)?;
        }
        entries.sort_by_key(|&(i, j, _)| (i, j));
        if let Some(w) = entries.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::DuplicateEntry { row: w[0].0, col: w[0].1 });
        }
        Ok(SparseTriples { rows, cols, bits, entries })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn entries(&self) -> &[(usize, usize, i128)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows, self.cols, self.bits);
        for &(i, j, v) in &self.entries {
            m.data[i * self.cols + j] = v;
        }
        m
    }
}

/// Which operand's vectors are preprocessed into chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChainSide {
    /// Columns of `A` when `A` has more rows than `B` has columns, rows of
    /// `B` otherwise.
    #[default]
    Auto,
    Columns,
    Rows,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MatmulConfig {
    pub chain: ChainConfig,
    pub side: ChainSide,
}

/// Work done by a matrix product, beyond the operation counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MatmulStats {
    pub chain_builds: u64,
    pub chain_evaluations: u64,
    /// Scalar products with both operands nonzero.
    pub products: u64,
}

impl MatmulStats {
    #[must_use]
    pub fn merge(self, o: MatmulStats) -> MatmulStats {
        MatmulStats {
            chain_builds: self.chain_builds + o.chain_builds,
            chain_evaluations: self.chain_evaluations + o.chain_evaluations,
            products: self.products + o.products,
        }
    }
}

/// How one scalar is obtained from the deduplicated set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarRef {
    Zero,
    /// `±2^shift`: the product is the vector itself, shifted.
    One {
        shift: u8,
        negative: bool,
    },
    /// `±(unique_odd[index] << shift)`.
    Odd {
        index: usize,
        shift: u8,
        negative: bool,
    },
}

/// Scalars reduced to distinct odd magnitudes greater than one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalarPlan {
    pub unique_odd: Vec<u32>,
    pub refs: Vec<ScalarRef>,
}

pub fn dedup_scalars(scalars: &[i64]) -> ScalarPlan {
    let mut index_of: BTreeMap<u32, usize> = BTreeMap::new();
    let mut unique_odd = Vec::new();
    let refs = scalars
        .iter()
        .map(|&s| {
            let mag = s.unsigned_abs();
            if mag == 0 {
                return ScalarRef::Zero;
            }
            let shift = mag.trailing_zeros() as u8;
            let odd = (mag >> shift) as u32;
            let negative = s < 0;
            if odd == 1 {
                return ScalarRef::One { shift, negative };
            }
            let index = *index_of.entry(odd).or_insert_with(|| {
                unique_odd.push(odd);
                unique_odd.len() - 1
            });
            ScalarRef::Odd { index, shift, negative }
        })
        .collect();
    ScalarPlan { unique_odd, refs }
}

/// Add every `vector[i] * scalars[j]` term to a result, via `emit(i, j, term)`.
///
/// `vector` is preprocessed into one chain; each distinct odd scalar magnitude
/// is evaluated against it once. Every emitted term is one counted output
/// addition, with any power-of-two shift folded into it.
pub fn outer_product<F>(
    vector: &[i64],
    scalars: &[i64],
    bits: u32,
    config: &ChainConfig,
    counter: &mut OpCounter,
    stats: &mut MatmulStats,
    mut emit: F,
) -> Result<()>
where
    F: FnMut(usize, usize, i128),
{
    let v = InputVector::from_signed(vector, bits)?;
    for &s in scalars {
        if s.unsigned_abs() >> bits != 0 {
            return Err(Error::ValueOutOfRange { value: s.into(), bits });
        }
    }
    let plan = dedup_scalars(scalars);
    let negative = v.negative().expect("built from signed values");
    let retained = v.values().len() as u64;
    stats.products += retained * plan.refs.iter().filter(|r| **r != ScalarRef::Zero).count() as u64;
    if retained == 0 {
        return Ok(());
    }

    let mut add_term = |counter: &mut OpCounter, i: usize, j: usize, magnitude: u64, shift: u32, neg: bool| {
        let term = i128::from(magnitude) << shift;
        counter.record_add(AddCategory::OutputAccumulate);
        emit(v.positions()[i], j, if neg { -term } else { term });
    };

    for (j, r) in plan.refs.iter().enumerate() {
        if let ScalarRef::One { shift, negative: neg } = *r {
            for (i, &x) in v.values().iter().enumerate() {
                add_term(counter, i, j, x.into(), shift.into(), neg ^ negative[i]);
            }
        }
    }
    if plan.unique_odd.is_empty() {
        return Ok(());
    }

    let chain = build_chain(&v, *config, counter)?;
    stats.chain_builds += 1;
    let top_shifts = &chain.levels[0].shifts;
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); plan.unique_odd.len()];
    for (j, r) in plan.refs.iter().enumerate() {
        if let ScalarRef::Odd { index, .. } = *r {
            users[index].push(j);
        }
    }
    for (index, &odd) in plan.unique_odd.iter().enumerate() {
        let products = Machine::new(bits, counter)?.evaluate(&chain, odd.into(), false)?;
        stats.chain_evaluations += 1;
        for &j in &users[index] {
            let ScalarRef::Odd { shift, negative: neg, .. } = plan.refs[j] else { unreachable!() };
            for (i, &p) in products.iter().enumerate() {
                let total = u32::from(top_shifts[i]) + u32::from(shift);
                add_term(counter, i, j, p, total, neg ^ negative[i]);
            }
        }
    }
    Ok(())
}

fn to_i64(v: i128) -> i64 {
    i64::try_from(v).expect("inputs are at most 32 bits")
}

/// `acc += col * row^T`, `col` of length `acc.rows()` and `row` of length
/// `acc.cols()`.
pub fn outer_product_accumulate(
    col: &[i64],
    row: &[i64],
    bits: u32,
    acc: &mut DenseMatrix,
    config: &ChainConfig,
    counter: &mut OpCounter,
) -> Result<MatmulStats> {
    if col.len() != acc.rows || row.len() != acc.cols {
        return Err(Error::DimensionMismatch("outer product does not match accumulator shape"));
    }
    let mut stats = MatmulStats::default();
    let cols = acc.cols;
    let data = &mut acc.data;
    if col.len() > row.len() {
        outer_product(col, row, bits, config, counter, &mut stats, |i, j, t| data[i * cols + j] += t)?;
    } else {
        outer_product(row, col, bits, config, counter, &mut stats, |j, i, t| data[i * cols + j] += t)?;
    }
    acc.bits = acc.bits.max(required_bits(&acc.data));
    Ok(stats)
}

fn check_operands(a_cols: usize, b_rows: usize, a_bits: u32, b_bits: u32) -> Result<u32> {
    if a_cols != b_rows {
        return Err(Error::DimensionMismatch("A.cols must equal B.rows"));
    }
    check_bits(a_bits)?;
    check_bits(b_bits)?;
    Ok(a_bits.max(b_bits))
}

fn use_columns(side: ChainSide, n: usize, m: usize) -> bool {
    match side {
        ChainSide::Auto => n > m,
        ChainSide::Columns => true,
        ChainSide::Rows => false,
    }
}

/// Result of a counted product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Product<M> {
    pub matrix: M,
    pub counter: OpCounter,
    pub stats: MatmulStats,
}

/// Partial dense product over the outer products `ks`, as a row-major
/// accumulator. Disjoint ranges can run on separate threads and be summed.
pub fn dense_partial(
    a: &DenseMatrix,
    b: &DenseMatrix,
    ks: core::ops::Range<usize>,
    config: &MatmulConfig,
) -> Result<(Vec<i128>, OpCounter, MatmulStats)> {
    let bits = check_operands(a.cols, b.rows, a.bits, b.bits)?;
    let (n, m) = (a.rows, b.cols);
    let columns = use_columns(config.side, n, m);
    let mut acc = vec![0i128; n * m];
    let mut counter = OpCounter::new();
    let mut stats = MatmulStats::default();
    for k in ks {
        let col: Vec<i64> = a.col(k).map(to_i64).collect();
        let row: Vec<i64> = b.row(k).iter().copied().map(to_i64).collect();
        if columns {
            outer_product(&col, &row, bits, &config.chain, &mut counter, &mut stats, |i, j, t| acc[i * m + j] += t)?;
        } else {
            outer_product(&row, &col, bits, &config.chain, &mut counter, &mut stats, |j, i, t| acc[i * m + j] += t)?;
        }
    }
    Ok((acc, counter, stats))
}

/// Width declared on a product: at least as wide as either operand, and wide
/// enough for every result value.
pub fn product_bits(a_bits: u32, b_bits: u32, data: &[i128]) -> u32 {
    a_bits.max(b_bits).max(required_bits(data))
}

/// `A * B` without a single multiplication.
pub fn matmul_dense(a: &DenseMatrix, b: &DenseMatrix, config: &MatmulConfig) -> Result<Product<DenseMatrix>> {
    let (data, counter, stats) = dense_partial(a, b, 0..a.cols, config)?;
    let bits = product_bits(a.bits, b.bits, &data);
    Ok(Product { matrix: DenseMatrix { rows: a.rows, cols: b.cols, bits, data }, counter, stats })
}

/// Reference triple loop with native multiplication.
pub fn matmul_naive(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch("A.cols must equal B.rows"));
    }
    let (n, m) = (a.rows, b.cols);
    let mut data = vec![0i128; n * m];
    for i in 0..n {
        for k in 0..a.cols {
            let x = a.get(i, k);
            for j in 0..m {
                data[i * m + j] += x * b.get(k, j);
            }
        }
    }
    let bits = product_bits(a.bits, b.bits, &data);
    Ok(DenseMatrix { rows: n, cols: m, bits, data })
}

/// Sparse `A * B`, touching nonzero entries only.
///
/// Column `k` of `A` and row `k` of `B` are gathered from the triples along
/// with their row (resp. column) locations; the longer list is the chain.
/// Results that cancel to zero are dropped.
pub fn matmul_sparse(a: &SparseTriples, b: &SparseTriples, config: &MatmulConfig) -> Result<Product<SparseTriples>> {
    let bits = check_operands(a.cols, b.rows, a.bits, b.bits)?;
    let inner = a.cols;
    let mut a_cols: Vec<(Vec<usize>, Vec<i64>)> = vec![(Vec::new(), Vec::new()); inner];
    for &(i, k, v) in &a.entries {
        a_cols[k].0.push(i);
        a_cols[k].1.push(to_i64(v));
    }
    let mut b_rows: Vec<(Vec<usize>, Vec<i64>)> = vec![(Vec::new(), Vec::new()); inner];
    for &(k, j, v) in &b.entries {
        b_rows[k].0.push(j);
        b_rows[k].1.push(to_i64(v));
    }

    let mut acc: BTreeMap<(usize, usize), i128> = BTreeMap::new();
    let mut counter = OpCounter::new();
    let mut stats = MatmulStats::default();
    for ((rows_at, col), (cols_at, row)) in a_cols.iter().zip(&b_rows) {
        if col.is_empty() || row.is_empty() {
            continue;
        }
        let columns = use_columns(config.side, col.len(), row.len());
        if columns {
            outer_product(col, row, bits, &config.chain, &mut counter, &mut stats, |p, q, t| {
                *acc.entry((rows_at[p], cols_at[q])).or_insert(0) += t;
            })?;
        } else {
            outer_product(row, col, bits, &config.chain, &mut counter, &mut stats, |q, p, t| {
                *acc.entry((rows_at[p], cols_at[q])).or_insert(0) += t;
            })?;
        }
    }
    let entries: Vec<(usize, usize, i128)> =
        acc.into_iter().filter(|&(_, v)| v != 0).map(|((i, j), v)| (i, j, v)).collect();
    let bits = product_bits(a.bits, b.bits, &entries.iter().map(|e| e.2).collect::<Vec<_>>());
    Ok(Product { matrix: SparseTriples { rows: a.rows, cols: b.cols, bits, entries }, counter, stats })
}
