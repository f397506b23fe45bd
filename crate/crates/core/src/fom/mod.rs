//! Parametrized full-order models on structured grids.

mod gaussian;
pub mod grid;
mod nonlinear;
mod thermal;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkit::{dot, norm2, BandCholesky, CsrMatrix, NumError};

pub use gaussian::{assemble_gaussian_poisson, gaussian_forcing, GaussianPoisson};
pub use grid::{DofMap, TensorGrid};
pub use nonlinear::{viscosity, NonlinearFom, NEWTON_MAX_ITERS, NEWTON_TOL};
pub use thermal::{assemble_thermal_block, theta_thermal, ThermalBlock, THERMAL_REFERENCE_MU};

#[derive(Debug, Error)]
pub enum FomError {
    #[error("parameter domain: {0}")]
    InvalidDomain(String),
    #[error("parameter {value} (component {index}) outside [{lower}, {upper}]")]
    OutOfDomain {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("{map} coefficients undefined at mu = {value}")]
    ThetaDomain { map: &'static str, value: f64 },
    #[error("grid resolution {0} is below the minimum of 3")]
    GridTooCoarse(usize),
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("inner-product matrix is not symmetric positive definite")]
    GramNotSpd(#[source] NumError),
    #[error("linear solve failed")]
    Solver(#[from] NumError),
    #[error("Newton did not converge in {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, FomError>;

/// Box `∏ [lower_k, upper_k]` in parameter space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ParamDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(FomError::InvalidDomain(format!(
                "bounds of length {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (k, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(FomError::InvalidDomain(format!(
                    "component {k}: lower {l} must be below upper {u}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn interval(lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower], vec![upper])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn check(&self, mu: &[f64]) -> Result<()> {
        if mu.len() != self.dim() {
            return Err(FomError::Dimension {
                context: "parameter length",
                expected: self.dim(),
                got: mu.len(),
            });
        }
        for (k, &v) in mu.iter().enumerate() {
            let (l, u) = (self.lower[k], self.upper[k]);
            let slack = 1e-12 * (u - l);
            if !(v >= l - slack && v <= u + slack) {
                return Err(FomError::OutOfDomain {
                    index: k,
                    value: v,
                    lower: l,
                    upper: u,
                });
            }
        }
        Ok(())
    }

    /// Tensor grid with `per_dim` equispaced points per component
    /// (first component fastest).
    pub fn uniform_grid(&self, per_dim: usize) -> Vec<Vec<f64>> {
        let p = self.dim();
        let total = per_dim.pow(p as u32);
        (0..total)
            .map(|mut idx| {
                (0..p)
                    .map(|k| {
                        let t = idx % per_dim;
                        idx /= per_dim;
                        if per_dim == 1 {
                            0.5 * (self.lower[k] + self.upper[k])
                        } else {
                            self.lower[k] + (self.upper[k] - self.lower[k]) * t as f64 / (per_dim - 1) as f64
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn sample_uniform(&self, n: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                self.lower
                    .iter()
                    .zip(&self.upper)
                    .map(|(&l, &u)| rng.gen_range(l..u))
                    .collect()
            })
            .collect()
    }

    /// Affine map of the box onto `[-1, 1]^p`.
    pub fn to_unit(&self, mu: &[f64]) -> Vec<f64> {
        mu.iter()
            .enumerate()
            .map(|(k, &v)| 2.0 * (v - self.lower[k]) / (self.upper[k] - self.lower[k]) - 1.0)
            .collect()
    }

    pub fn from_unit(&self, t: &[f64]) -> Vec<f64> {
        t.iter()
            .enumerate()
            .map(|(k, &v)| self.lower[k] + 0.5 * (v + 1.0) * (self.upper[k] - self.lower[k]))
            .collect()
    }
}

type ThetaFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Parameter-dependent coefficient functions of an affine expansion.
#[derive(Clone)]
pub enum ThetaMap {
    /// The four thermal-block coefficients of [`theta_thermal`].
    ThermalBlock,
    /// μ-independent coefficients.
    Constant(Vec<f64>),
    /// Anything else; not serializable.
    Custom {
        name: String,
        len: usize,
        f: Arc<ThetaFn>,
    },
}

impl fmt::Debug for ThetaMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ThermalBlock => write!(f, "ThermalBlock"),
            Self::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            Self::Custom { name, len, .. } => write!(f, "Custom({name}, len {len})"),
        }
    }
}

/// Serializable subset of [`ThetaMap`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThetaDescriptor {
    ThermalBlock,
    Constant { values: Vec<f64> },
}

impl ThetaMap {
    pub fn custom(name: impl Into<String>, len: usize, f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self::Custom {
            name: name.into(),
            len,
            f: Arc::new(f),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::ThermalBlock => 4,
            Self::Constant(v) => v.len(),
            Self::Custom { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn eval(&self, mu: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::ThermalBlock => Ok(theta_thermal(mu[0])?.to_vec()),
            Self::Constant(v) => Ok(v.clone()),
            Self::Custom { f, len, .. } => {
                let v = f(mu);
                if v.len() != *len {
                    return Err(FomError::Dimension {
                        context: "custom theta length",
                        expected: *len,
                        got: v.len(),
                    });
                }
                Ok(v)
            }
        }
    }

    pub fn descriptor(&self) -> Option<ThetaDescriptor> {
        match self {
            Self::ThermalBlock => Some(ThetaDescriptor::ThermalBlock),
            Self::Constant(v) => Some(ThetaDescriptor::Constant { values: v.clone() }),
            Self::Custom { .. } => None,
        }
    }

    pub fn from_descriptor(d: &ThetaDescriptor) -> Self {
        match d {
            ThetaDescriptor::ThermalBlock => Self::ThermalBlock,
            ThetaDescriptor::Constant { values } => Self::Constant(values.clone()),
        }
    }
}

/// `(Σ Θ_a^i(μ) A_i) u = Σ Θ_f^i(μ) f_i` with output `s = Σ Θ_l^i(μ) l_iᵀ u`.
///
/// When no output terms are given the problem is compliant: `l = f`.
#[derive(Clone, Debug)]
pub struct AffineSystem {
    matrix_terms: Vec<CsrMatrix>,
    rhs_terms: Vec<Vec<f64>>,
    output_terms: Option<(Vec<Vec<f64>>, ThetaMap)>,
    theta_a: ThetaMap,
    theta_f: ThetaMap,
    gram: CsrMatrix,
    gram_factor: Arc<BandCholesky>,
    domain: ParamDomain,
}

impl AffineSystem {
    pub fn new(
        matrix_terms: Vec<CsrMatrix>,
        theta_a: ThetaMap,
        rhs_terms: Vec<Vec<f64>>,
        theta_f: ThetaMap,
        gram: CsrMatrix,
        domain: ParamDomain,
    ) -> Result<Self> {
        let n = gram.nrows();
        if matrix_terms.is_empty() {
            return Err(FomError::Dimension {
                context: "matrix term count",
                expected: 1,
                got: 0,
            });
        }
        if theta_a.len() != matrix_terms.len() {
            return Err(FomError::Dimension {
                context: "theta_a length vs matrix terms",
                expected: matrix_terms.len(),
                got: theta_a.len(),
            });
        }
        if theta_f.len() != rhs_terms.len() {
            return Err(FomError::Dimension {
                context: "theta_f length vs rhs terms",
                expected: rhs_terms.len(),
                got: theta_f.len(),
            });
        }
        for a in &matrix_terms {
            if a.nrows() != n || a.ncols() != n {
                return Err(FomError::Dimension {
                    context: "matrix term dimension",
                    expected: n,
                    got: a.nrows(),
                });
            }
        }
        for f in &rhs_terms {
            if f.len() != n {
                return Err(FomError::Dimension {
                    context: "rhs term length",
                    expected: n,
                    got: f.len(),
                });
            }
        }
        let gram_factor = BandCholesky::new(&gram).map_err(FomError::GramNotSpd)?;
        Ok(Self {
            matrix_terms,
            rhs_terms,
            output_terms: None,
            theta_a,
            theta_f,
            gram,
            gram_factor: Arc::new(gram_factor),
            domain,
        })
    }

    /// Replaces the right-hand side expansion.
    pub fn with_rhs(mut self, rhs_terms: Vec<Vec<f64>>, theta_f: ThetaMap) -> Result<Self> {
        if theta_f.len() != rhs_terms.len() {
            return Err(FomError::Dimension {
                context: "theta_f length vs rhs terms",
                expected: rhs_terms.len(),
                got: theta_f.len(),
            });
        }
        if let Some(f) = rhs_terms.iter().find(|f| f.len() != self.n_dofs()) {
            return Err(FomError::Dimension {
                context: "rhs term length",
                expected: self.n_dofs(),
                got: f.len(),
            });
        }
        self.rhs_terms = rhs_terms;
        self.theta_f = theta_f;
        Ok(self)
    }

    /// Sets a non-compliant output functional.
    pub fn with_output(mut self, terms: Vec<Vec<f64>>, theta_l: ThetaMap) -> Result<Self> {
        if theta_l.len() != terms.len() {
            return Err(FomError::Dimension {
                context: "theta_l length vs output terms",
                expected: terms.len(),
                got: theta_l.len(),
            });
        }
        self.output_terms = Some((terms, theta_l));
        Ok(self)
    }

    pub fn n_dofs(&self) -> usize {
        self.gram.nrows()
    }

    pub fn q_a(&self) -> usize {
        self.matrix_terms.len()
    }

    pub fn q_f(&self) -> usize {
        self.rhs_terms.len()
    }

    pub fn matrix_terms(&self) -> &[CsrMatrix] {
        &self.matrix_terms
    }

    pub fn rhs_terms(&self) -> &[Vec<f64>] {
        &self.rhs_terms
    }

    pub fn theta_a(&self) -> &ThetaMap {
        &self.theta_a
    }

    pub fn theta_f(&self) -> &ThetaMap {
        &self.theta_f
    }

    pub fn gram(&self) -> &CsrMatrix {
        &self.gram
    }

    pub fn gram_factor(&self) -> &BandCholesky {
        &self.gram_factor
    }

    pub fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    pub fn is_compliant(&self) -> bool {
        self.output_terms.is_none()
    }

    /// Output terms and their coefficients (the rhs expansion when compliant).
    pub fn output_expansion(&self) -> (&[Vec<f64>], &ThetaMap) {
        match &self.output_terms {
            Some((t, th)) => (t, th),
            None => (&self.rhs_terms, &self.theta_f),
        }
    }

    pub fn assemble_matrix(&self, mu: &[f64]) -> Result<CsrMatrix> {
        let theta = self.theta_a.eval(mu)?;
        let terms: Vec<(f64, &CsrMatrix)> = theta.iter().copied().zip(&self.matrix_terms).collect();
        Ok(CsrMatrix::linear_combination(&terms)?)
    }

    pub fn assemble_rhs(&self, mu: &[f64]) -> Result<Vec<f64>> {
        let theta = self.theta_f.eval(mu)?;
        let mut f = vec![0.0; self.n_dofs()];
        for (t, fi) in theta.iter().zip(&self.rhs_terms) {
            f.iter_mut().zip(fi).for_each(|(a, b)| *a += t * b);
        }
        Ok(f)
    }

    pub fn output(&self, mu: &[f64], u: &[f64]) -> Result<f64> {
        let (terms, theta) = self.output_expansion();
        let th = theta.eval(mu)?;
        Ok(th.iter().zip(terms).map(|(t, l)| t * dot(l, u)).sum())
    }
}

/// Full-order solution at one parameter point.
#[derive(Clone, Debug)]
pub struct FomSolution {
    pub mu: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub output: f64,
}

/// Solves the assembled full-order system at `mu` (Cholesky plus one step
/// of iterative refinement).
pub fn fom_solve(system: &AffineSystem, mu: &[f64]) -> Result<FomSolution> {
    system.domain.check(mu)?;
    let a = system.assemble_matrix(mu)?;
    let f = system.assemble_rhs(mu)?;
    let u = spd_solve(&a, &f)?;
    let output = system.output(mu, &u)?;
    Ok(FomSolution {
        mu: mu.to_vec(),
        coefficients: u,
        output,
    })
}

/// Cholesky solve with one refinement step.
pub(crate) fn spd_solve(a: &CsrMatrix, f: &[f64]) -> Result<Vec<f64>> {
    let chol = BandCholesky::new(a)?;
    let mut u = chol.solve(f);
    if norm2(f) > 0.0 {
        let au = a.matvec(&u);
        let r: Vec<f64> = f.iter().zip(&au).map(|(p, q)| p - q).collect();
        let du = chol.solve(&r);
        u.iter_mut().zip(&du).for_each(|(x, d)| *x += d);
    }
    Ok(u)
}

/// Solves at every parameter point, in parallel, results in input order.
pub fn fom_solve_batch(system: &AffineSystem, mus: &[Vec<f64>]) -> Result<Vec<FomSolution>> {
    mus.par_iter().map(|mu| fom_solve(system, mu)).collect()
}
