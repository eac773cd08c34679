//! Chebyshev-filtered subspace iteration for dense Hermitian eigenproblems,
//! executed over a simulated 2D process grid.
//!
//! The crate provides:
//!
//! - [`grid`]: a p×q worker grid with row/column communicators,
//!   deterministic in-process collectives, block and block-cyclic data
//!   distribution, and the per-rank memory model.
//! - [`kernels`]: dense linear-algebra primitives (GEMM, Gram update,
//!   Cholesky, triangular solve, Householder QR, Hermitian eigensolver).
//! - [`matgen`]: test matrices with prescribed spectra, parallel random
//!   initial vectors, and raw binary matrix I/O.
//! - [`lanczos`]: spectral-bound estimation from a few Lanczos runs.
//! - [`filter`]: the three-term Chebyshev polynomial filter with
//!   per-vector degrees and degree optimization.
//! - [`caqr`]: CholeskyQR(k), shifted CholeskyQR2, the condition-number
//!   estimate of the filtered block, and the dispatch heuristic with a
//!   Householder fallback.
//! - [`solver`]: the subspace iteration loop (filter → QR →
//!   Rayleigh–Ritz → residuals → locking).
//! - [`profiler`]: per-kernel compute/communicate/copy timing and
//!   message/word counters, exportable as CSV.

pub mod caqr;
pub mod error;
pub mod filter;
pub mod grid;
pub mod kernels;
pub mod lanczos;
pub mod matgen;
pub mod matrix;
pub mod profiler;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use matrix::{DenseMatrix, MatView, MatViewMut};
pub use scalar::Scalar;

pub use num_complex::Complex64;
