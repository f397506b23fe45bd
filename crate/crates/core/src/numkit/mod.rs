//! Dense and banded linear-algebra kernels used by every other module.
//!
//! Everything here is a pure function of its inputs. The dense routines are
//! sized for reduced systems (tens to a few hundred unknowns); full-order
//! operators go through [`CsrMatrix`] and the banded factorizations.

mod dense;
mod eig;
mod gram_schmidt;
mod solve;
mod sparse;
mod svd;

pub use dense::{dot, norm2, DenseMatrix};
pub use eig::{sym_eig, SymEig};
pub use gram_schmidt::{orthonormalize, Orthonormalization, DEFLATION_RATIO};
pub use solve::{cholesky_solve, lstsq, solve, solve_banded, LuFactor};
pub use sparse::{
    smallest_generalized_eigenvalue, BandCholesky, CsrMatrix, IdentityOperator, LinearOperator,
};
pub use svd::{svd, SvdResult};

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum NumError {
    #[error("matrix has no entries")]
    Empty,
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is numerically singular (pivot {pivot:e} at step {step})")]
    Singular { step: usize, pivot: f64 },
    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {gap:e}")]
    Asymmetric { row: usize, col: usize, gap: f64 },
    #[error("matrix is not positive definite (breakdown at row {row})")]
    NotPositiveDefinite { row: usize },
    #[error("rank-deficient least-squares system (column {column})")]
    RankDeficient { column: usize },
    #[error("{what} did not converge after {iterations} iterations")]
    NotConverged { what: &'static str, iterations: usize },
}

pub type Result<T> = std::result::Result<T, NumError>;
