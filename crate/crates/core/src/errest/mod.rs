//! Residual-based a posteriori error bounds.
//!
//! The residual dual norm is split into an offline part ([`riesz_offline`],
//! full-order solves with the gram matrix) and an online part
//! ([`residual_dual_norm`], cost depending on `N`, `Q_a`, `Q_f` only).
//! Coercivity is bounded from below by the min-theta method.

mod bounds;
mod coercivity;
mod riesz;

use thiserror::Error;

use crate::fom::FomError;
use crate::numkit::NumError;
use crate::rb::RbError;

pub use bounds::{bound_sweep, error_bounds, write_bound_csv, BoundRecord, ErrorBounds, ResidualEstimator};
pub use coercivity::{coercivity_lb, CoercivityModel};
pub use riesz::{
    negative_clamp_count, residual_dual_norm, residual_dual_norm_quadratic, riesz_offline, ResidualOffline,
    ResidualTerm,
};

#[derive(Debug, Error)]
pub enum ErrestError {
    #[error("theta_{index}({mu:?}) = {value} is not positive; min-theta bound inapplicable")]
    NonPositiveTheta { index: usize, mu: Vec<f64>, value: f64 },
    #[error("affine term {0} is not positive semidefinite")]
    IndefiniteTerm(usize),
    #[error("output bound requires a compliant system")]
    NotCompliant,
    #[error("{context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Fom(#[from] FomError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Rb(#[from] RbError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ErrestError>;

impl From<ErrestError> for RbError {
    fn from(e: ErrestError) -> Self {
        match e {
            ErrestError::Rb(inner) => inner,
            ErrestError::Fom(inner) => RbError::Fom(inner),
            other => RbError::Estimator(other.to_string()),
        }
    }
}
