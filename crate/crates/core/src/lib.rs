//! Integer matrix multiplication without a multiplier.
//!
//! Every scalar product is replaced by a short chain of additions: the
//! multiplicand vector is aligned, sorted, deduplicated and differenced
//! recursively ([`chain`]), and each scalar is then pushed back up that chain
//! with shift-and-add steps ([`scalarmul`]). Every addition, copy and shift is
//! attributed to a category in an [`OpCounter`], so the "additions per
//! multiplication" figure of a run is measured rather than estimated.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and the
//! multi-threaded drivers live in the `addmul` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod chain;
mod error;
pub mod experiments;
pub mod matmul;
pub mod opcount;
pub mod scalarmul;
pub mod softfloat;

pub use crate::chain::{build_chain, ChainConfig, ChainLevel, DiffChain, InputVector};
pub use crate::error::{Error, Result};

pub use crate::matmul::{
    matmul_dense, matmul_naive, matmul_sparse, ChainSide, DenseMatrix, MatmulConfig, MatmulStats, SparseTriples,
};
pub use crate::opcount::{AddCategory, OpCounter};
pub use crate::scalarmul::{multiply_chain, Machine, ProductVector};
pub use crate::softfloat::{matmul_softfloat, matmul_softfloat_naive, FloatMatrix, SoftFloat};

/// Largest element width supported: products must fit a 64-bit accumulator.
pub const MAX_BITS: u32 = 32;
