//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    #[error("Cholesky factorization failed at pivot {pivot} (matrix not positive definite)")]
    CholeskyBreakdown { pivot: usize },

    #[error("triangular solve hit a zero diagonal at position {index}")]
    SingularTriangular { index: usize },

    #[error("eigensolver failed to converge within {max_sweeps} sweeps")]
    EigNoConvergence { max_sweeps: usize },

    #[error("collective shape mismatch: member buffers differ ({detail})")]
    CollectiveShape { detail: String },

    #[error("invalid broadcast root {root} for communicator of size {size}")]
    InvalidRoot { root: usize, size: usize },

    #[error("a grid worker panicked; collectives were poisoned")]
    CollectivePoisoned,

    #[error(
        "unsupported C/B redistribution on a {p}x{q} grid: only square grids \
         (matching row/column block sizes), px1 and 1xq are supported"
    )]
    UnsupportedRedistribution { p: usize, q: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("matrix is not Hermitian: |H[{i},{j}] - conj(H[{j},{i}])| = {diff:.3e}")]
    NotHermitian { i: usize, j: usize, diff: f64 },

    #[error("file size mismatch for {path}: expected {expected} bytes, found {found}")]
    FileSize {
        path: String,
        expected: u64,
        found: u64,
    },

    #[error("solver failed at iteration {iter}: {source}")]
    SolverKernel {
        iter: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
