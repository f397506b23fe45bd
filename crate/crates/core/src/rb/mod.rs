//! Reduced bases (POD and greedy), Galerkin projection and the online solve.

mod greedy;
mod pod;
pub mod probe;
mod serialize;

use std::sync::Arc;

use thiserror::Error;

use crate::fom::{AffineSystem, FomError, ParamDomain, ThetaMap};
use crate::numkit::{dot, DenseMatrix, LinearOperator, LuFactor, NumError};

pub use greedy::{greedy, ErrorEstimator, GreedyOptions, GreedyResult, GreedyStep, OnlineEstimate};
pub use pod::{energy_rank, pod, PodCriterion};
pub use serialize::{load_rom, save_rom, RomManifest, ROM_FORMAT_VERSION};

#[derive(Debug, Error)]
pub enum RbError {
    #[error("snapshot set is empty")]
    EmptySnapshots,
    #[error("snapshot matrix is identically zero")]
    ZeroSnapshots,
    #[error("parameter {0:?} appears more than once")]
    DuplicateParameter(Vec<f64>),
    #[error("invalid truncation criterion: {0}")]
    InvalidCriterion(String),
    #[error("{context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("initial parameter {0:?} is not in the training set")]
    StartNotInTrainingSet(Vec<f64>),
    #[error("reduced system is singular")]
    SingularReduced(#[source] NumError),
    #[error("theta map {0} cannot be serialized")]
    UnserializableTheta(String),
    #[error("ROM file {path}: {message}")]
    Format { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Fom(#[from] FomError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("error estimator: {0}")]
    Estimator(String),
}

pub type Result<T> = std::result::Result<T, RbError>;

/// Full-order solutions stored column-wise with their parameters.
#[derive(Clone, Debug)]
pub struct SnapshotSet {
    pub matrix: DenseMatrix,
    pub parameters: Vec<Vec<f64>>,
}

impl SnapshotSet {
    pub fn new(matrix: DenseMatrix, parameters: Vec<Vec<f64>>) -> Result<Self> {
        if matrix.cols() == 0 || parameters.is_empty() {
            return Err(RbError::EmptySnapshots);
        }
        if matrix.cols() != parameters.len() {
            return Err(RbError::Dimension {
                context: "snapshot columns vs parameters",
                expected: matrix.cols(),
                got: parameters.len(),
            });
        }
        for (k, p) in parameters.iter().enumerate() {
            if parameters[..k].contains(p) {
                return Err(RbError::DuplicateParameter(p.clone()));
            }
        }
        Ok(Self { matrix, parameters })
    }

    pub fn from_columns(columns: &[Vec<f64>], parameters: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(DenseMatrix::from_columns(columns)?, parameters)
    }
}

/// Basis `𝕍` (columns orthonormal in the inner product it was built with).
#[derive(Clone, Debug)]
pub struct ReducedBasis {
    pub basis: DenseMatrix,
    /// All POD singular values (kept and discarded); empty for greedy bases.
    pub singular_values: Vec<f64>,
    /// Greedy selections in order; empty for POD bases.
    pub selected_parameters: Vec<Vec<f64>>,
}

impl ReducedBasis {
    pub fn n(&self) -> usize {
        self.basis.cols()
    }

    pub fn n_dofs(&self) -> usize {
        self.basis.rows()
    }

    /// `max |𝕍ᵀ G 𝕍 − I|`.
    pub fn orthonormality_defect(&self, gram: &dyn LinearOperator) -> f64 {
        let cols = self.basis.columns();
        let gcols: Vec<Vec<f64>> = cols.iter().map(|c| gram.apply(c)).collect();
        let mut worst: f64 = 0.0;
        for i in 0..cols.len() {
            for j in 0..cols.len() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(&cols[i], &gcols[j]) - target).abs());
            }
        }
        worst
    }

    /// Leading `n` columns.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            basis: self.basis.leading_columns(n),
            singular_values: self.singular_values.clone(),
            selected_parameters: self.selected_parameters.iter().take(n).cloned().collect(),
        }
    }
}

/// `𝕍 u_N`.
pub fn lift(basis: &ReducedBasis, u_n: &[f64]) -> Result<Vec<f64>> {
    if u_n.len() != basis.n() {
        return Err(RbError::Dimension {
            context: "reduced coefficient length",
            expected: basis.n(),
            got: u_n.len(),
        });
    }
    if basis.n() == 0 {
        return Ok(vec![0.0; basis.n_dofs()]);
    }
    Ok(basis.basis.matvec(u_n)?)
}

/// Galerkin-projected affine system. Holds only `N`-sized data apart from
/// the basis itself, which is kept for lifting and never read by the
/// online solve.
#[derive(Clone, Debug)]
pub struct RomSystem {
    pub(crate) matrix_terms: Vec<DenseMatrix>,
    pub(crate) rhs_terms: Vec<Vec<f64>>,
    pub(crate) output_terms: Vec<Vec<f64>>,
    pub(crate) theta_a: ThetaMap,
    pub(crate) theta_f: ThetaMap,
    pub(crate) theta_l: ThetaMap,
    pub(crate) domain: ParamDomain,
    pub(crate) basis: Arc<ReducedBasis>,
}

impl RomSystem {
    pub fn n(&self) -> usize {
        self.matrix_terms.first().map_or(0, DenseMatrix::rows)
    }

    pub fn q_a(&self) -> usize {
        self.matrix_terms.len()
    }

    pub fn q_f(&self) -> usize {
        self.rhs_terms.len()
    }

    pub fn matrix_terms(&self) -> &[DenseMatrix] {
        &self.matrix_terms
    }

    pub fn rhs_terms(&self) -> &[Vec<f64>] {
        &self.rhs_terms
    }

    pub fn output_terms(&self) -> &[Vec<f64>] {
        &self.output_terms
    }

    pub fn theta_a(&self) -> &ThetaMap {
        &self.theta_a
    }

    pub fn theta_f(&self) -> &ThetaMap {
        &self.theta_f
    }

    pub fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    pub fn basis(&self) -> &ReducedBasis {
        probe::basis_read();
        &self.basis
    }

    pub fn lift(&self, u_n: &[f64]) -> Result<Vec<f64>> {
        lift(self.basis(), u_n)
    }

    /// `Σ Θ_a^i(μ) 𝕍ᵀA_i𝕍`.
    pub fn assemble_matrix(&self, mu: &[f64]) -> Result<DenseMatrix> {
        let theta = self.theta_a.eval(mu)?;
        probe::alloc(theta.len());
        let n = self.n();
        let mut a = DenseMatrix::zeros(n, n);
        probe::alloc(n * n);
        for (t, m) in theta.iter().zip(&self.matrix_terms) {
            a.axpy(*t, m)?;
        }
        Ok(a)
    }

    pub fn assemble_rhs(&self, mu: &[f64]) -> Result<Vec<f64>> {
        let theta = self.theta_f.eval(mu)?;
        probe::alloc(theta.len());
        Ok(combine(&theta, &self.rhs_terms, self.n()))
    }

    pub fn output(&self, mu: &[f64], u_n: &[f64]) -> Result<f64> {
        let theta = self.theta_l.eval(mu)?;
        probe::alloc(theta.len());
        Ok(theta.iter().zip(&self.output_terms).map(|(t, l)| t * dot(l, u_n)).sum())
    }
}

fn combine(theta: &[f64], terms: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    probe::alloc(n);
    for (t, v) in theta.iter().zip(terms) {
        out.iter_mut().zip(v).for_each(|(o, x)| *o += t * x);
    }
    out
}

/// Precomputes `𝕍ᵀA_i𝕍`, `𝕍ᵀf_i` and `𝕍ᵀl_i`.
pub fn project(system: &AffineSystem, basis: &ReducedBasis) -> Result<RomSystem> {
    if basis.n_dofs() != system.n_dofs() {
        return Err(RbError::Dimension {
            context: "basis rows vs system dofs",
            expected: system.n_dofs(),
            got: basis.n_dofs(),
        });
    }
    let cols = basis.basis.columns();
    let n = cols.len();
    let matrix_terms = system
        .matrix_terms()
        .iter()
        .map(|a| {
            let acols: Vec<Vec<f64>> = cols.iter().map(|c| a.matvec(c)).collect();
            DenseMatrix::from_fn(n, n, |i, j| dot(&cols[i], &acols[j]))
        })
        .collect();
    let reduce = |v: &Vec<f64>| -> Vec<f64> { cols.iter().map(|c| dot(c, v)).collect() };
    let rhs_terms = system.rhs_terms().iter().map(reduce).collect();
    let (out_terms, theta_l) = system.output_expansion();
    let output_terms = out_terms.iter().map(reduce).collect();
    Ok(RomSystem {
        matrix_terms,
        rhs_terms,
        output_terms,
        theta_a: system.theta_a().clone(),
        theta_f: system.theta_f().clone(),
        theta_l: theta_l.clone(),
        domain: system.domain().clone(),
        basis: Arc::new(basis.clone()),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RomSolution {
    pub coefficients: Vec<f64>,
    pub output: f64,
}

/// Dense `N × N` solve at `mu`; never touches full-order data.
pub fn rom_solve(rom: &RomSystem, mu: &[f64]) -> Result<RomSolution> {
    rom.domain.check(mu)?;
    let n = rom.n();
    if n == 0 {
        return Ok(RomSolution {
            coefficients: Vec::new(),
            output: 0.0,
        });
    }
    let a = rom.assemble_matrix(mu)?;
    let f = rom.assemble_rhs(mu)?;
    probe::alloc(n * n);
    let lu = LuFactor::new(&a).map_err(RbError::SingularReduced)?;
    probe::alloc(n);
    let u = lu.solve(&f)?;
    let output = rom.output(mu, &u)?;
    Ok(RomSolution {
        coefficients: u,
        output,
    })
}
