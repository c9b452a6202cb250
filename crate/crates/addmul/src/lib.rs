//! Files, threads and the command line for [`addmul_core`].
//!
//! [`format`] reads and writes the dense, sparse and float matrix text
//! formats, [`parallel`] runs products and experiments on the rayon pool with
//! results identical to the sequential versions, and [`cli`] implements the
//! `addmul` binary.

pub mod cli;
mod error;
pub mod format;
pub mod parallel;
pub mod report;

pub use crate::error::{Error, Result};
pub use crate::format::{parse_matrix, read_matrix, write_matrix, Matrix};
