//! Empirical interpolation: EIM, DEIM, matrix DEIM and gappy least squares,
//! with the Gaussian-source and nonlinear-diffusion demonstrations.

mod deim;
mod eim;
mod export;
pub mod gaussian_demo;
pub mod mdeim_demo;

use thiserror::Error;

use crate::fom::FomError;
use crate::numkit::{DenseMatrix, NumError};
use crate::rb::RbError;

pub use deim::{
    deim_build, deim_coefficients, deim_eval, deim_select, gappy_fit, mdeim_build, DeimBasis, DeimStop, MdeimBasis,
};
pub use eim::{
    eim_build, eim_coefficients, eim_interpolate, lebesgue_constant, lebesgue_constants, EimBasis, EimOptions, PNorm,
};
pub use export::{write_deim, write_eim};

#[derive(Debug, Error)]
pub enum InterpError {
    #[error("sample matrix is identically zero")]
    ZeroData,
    #[error("sample matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("{context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error("operator snapshots differ in shape: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("reduced Newton stalled at residual {residual:.3e} for mu = {mu:?}")]
    NewtonStalled { residual: f64, mu: Vec<f64> },
    #[error("sampled rows are rank deficient")]
    RankDeficient(#[source] NumError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Fom(#[from] FomError),
    #[error(transparent)]
    Rb(#[from] RbError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, InterpError>;

/// Discrete function values `F[i][j] = f(x_i; μ_j)`.
#[derive(Clone, Debug)]
pub struct FunctionSamples {
    pub values: DenseMatrix,
    pub points: Vec<Vec<f64>>,
    pub parameters: Vec<Vec<f64>>,
}

impl FunctionSamples {
    pub fn new(values: DenseMatrix, points: Vec<Vec<f64>>, parameters: Vec<Vec<f64>>) -> Result<Self> {
        if values.rows() != points.len() {
            return Err(InterpError::Dimension {
                context: "sample rows vs points",
                expected: values.rows(),
                got: points.len(),
            });
        }
        if values.cols() != parameters.len() {
            return Err(InterpError::Dimension {
                context: "sample columns vs parameters",
                expected: values.cols(),
                got: parameters.len(),
            });
        }
        for i in 0..values.rows() {
            for j in 0..values.cols() {
                if !values.get(i, j).is_finite() {
                    return Err(InterpError::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self {
            values,
            points,
            parameters,
        })
    }

    /// Evaluates `f` at every point/parameter pair.
    pub fn from_fn(points: Vec<Vec<f64>>, parameters: Vec<Vec<f64>>, f: impl Fn(&[f64], &[f64]) -> f64) -> Result<Self> {
        let values = DenseMatrix::from_fn(points.len(), parameters.len(), |i, j| f(&points[i], &parameters[j]));
        Self::new(values, points, parameters)
    }
}

/// First index of the largest value.
pub(crate) fn argmax_first(values: impl IntoIterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (k, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (k, v);
        }
    }
    best
}
