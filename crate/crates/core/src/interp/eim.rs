use serde::{Deserialize, Serialize};

use super::{argmax_first, FunctionSamples, InterpError, Result};
use crate::numkit::DenseMatrix;

/// Norm used to rank training columns.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum PNorm {
    Two,
    #[default]
    Inf,
}

impl PNorm {
    fn of(self, v: impl Iterator<Item = f64>) -> f64 {
        match self {
            Self::Two => v.map(|x| x * x).sum::<f64>().sqrt(),
            Self::Inf => v.fold(0.0, |m, x| m.max(x.abs())),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EimOptions {
    pub tol: f64,
    /// Largest number of basis functions.
    pub n_max: usize,
    pub p_norm: PNorm,
}

impl Default for EimOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            n_max: 50,
            p_norm: PNorm::Inf,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EimBasis {
    /// `H_Q`, one normalized error column per iteration.
    pub basis: DenseMatrix,
    pub magic_indices: Vec<usize>,
    /// `T[k][q] = H_Q[i_k][q]`, unit lower triangular.
    pub interp_matrix: DenseMatrix,
    /// `max_j ‖F_:,j − I_k[F_:,j]‖_p` after `k` basis functions.
    pub error_history: Vec<f64>,
    pub selected_parameter_indices: Vec<usize>,
    /// Stopped because the next pivot was below round-off.
    pub saturated: bool,
    pub p_norm: PNorm,
}

impl EimBasis {
    pub fn q(&self) -> usize {
        self.magic_indices.len()
    }

    /// The leading `q` functions; the construction is hierarchical, so this
    /// is what a build capped at `q` would have returned.
    pub fn truncated(&self, q: usize) -> Self {
        let q = q.min(self.q());
        Self {
            basis: self.basis.leading_columns(q),
            magic_indices: self.magic_indices[..q].to_vec(),
            interp_matrix: DenseMatrix::from_fn(q, q, |i, j| self.interp_matrix.get(i, j)),
            error_history: self.error_history[..q].to_vec(),
            selected_parameter_indices: self.selected_parameter_indices[..q].to_vec(),
            saturated: self.saturated && q == self.q(),
            p_norm: self.p_norm,
        }
    }
}

/// Greedy EIM on a sample matrix.
///
/// The residual `R = F − I_k[F]` is kept for all columns and updated by the
/// rank-one correction `R ← R − h_k R[i_k, :]`, so every iteration costs
/// `O(M N)`.
pub fn eim_build(samples: &FunctionSamples, options: &EimOptions) -> Result<EimBasis> {
    if !(options.tol > 0.0) {
        return Err(InterpError::InvalidOption(format!("tol must be positive, got {}", options.tol)));
    }
    if options.n_max == 0 {
        return Err(InterpError::InvalidOption("n_max must be positive".into()));
    }
    let f = &samples.values;
    let (m, n) = (f.rows(), f.cols());
    let fmax = f.max_abs();
    if m == 0 || n == 0 || fmax == 0.0 {
        return Err(InterpError::ZeroData);
    }
    let mut r = f.clone();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut magic = Vec::new();
    let mut selected = Vec::new();
    let mut history = Vec::new();
    let mut saturated = false;
    let col_norms = |r: &DenseMatrix| -> Vec<f64> { (0..n).map(|j| options.p_norm.of((0..m).map(|i| r.get(i, j)))).collect() };
    let mut norms = col_norms(&r);
    while magic.len() < options.n_max {
        let (j, _) = argmax_first(norms.iter().copied());
        let (i, _) = argmax_first((0..m).map(|i| r.get(i, j).abs()));
        let pivot = r.get(i, j);
        if pivot.abs() < 1e-14 * fmax {
            saturated = true;
            break;
        }
        let h: Vec<f64> = (0..m).map(|k| r.get(k, j) / pivot).collect();
        let row: Vec<f64> = r.row(i).to_vec();
        for k in 0..m {
            if h[k] != 0.0 {
                for c in 0..n {
                    r.add_to(k, c, -h[k] * row[c]);
                }
            }
        }
        cols.push(h);
        magic.push(i);
        selected.push(j);
        norms = col_norms(&r);
        let eps = norms.iter().fold(0.0_f64, |a, &b| a.max(b));
        history.push(eps);
        if eps <= options.tol {
            break;
        }
    }
    let basis = DenseMatrix::from_columns(&cols)?;
    let q = magic.len();
    let interp_matrix = DenseMatrix::from_fn(q, q, |k, c| basis.get(magic[k], c));
    Ok(EimBasis {
        basis,
        magic_indices: magic,
        interp_matrix,
        error_history: history,
        selected_parameter_indices: selected,
        saturated,
        p_norm: options.p_norm,
    })
}

/// Solves `T a = values` by forward substitution.
pub fn eim_coefficients(basis: &EimBasis, values: &[f64]) -> Result<Vec<f64>> {
    let q = basis.q();
    if values.len() != q {
        return Err(InterpError::Dimension {
            context: "values at magic points",
            expected: q,
            got: values.len(),
        });
    }
    Ok(forward(&basis.interp_matrix, values, q))
}

fn forward(t: &DenseMatrix, b: &[f64], q: usize) -> Vec<f64> {
    let mut a = vec![0.0; q];
    for k in 0..q {
        let mut s = b[k];
        for c in 0..k {
            s -= t.get(k, c) * a[c];
        }
        a[k] = s / t.get(k, k);
    }
    a
}

/// `H_Q a` with `T a = values`.
pub fn eim_interpolate(basis: &EimBasis, values: &[f64]) -> Result<Vec<f64>> {
    let a = eim_coefficients(basis, values)?;
    Ok(basis.basis.matvec(&a)?)
}

/// Lebesgue constants `Λ_1 … Λ_Q` using the leading `q` functions.
pub fn lebesgue_constants(basis: &EimBasis) -> Vec<f64> {
    (1..=basis.q()).map(|q| lebesgue_of(basis, q)).collect()
}

/// `Λ_Q = max_i Σ_q |(H_Q T⁻¹)[i][q]|` over the sample points.
pub fn lebesgue_constant(basis: &EimBasis) -> f64 {
    lebesgue_of(basis, basis.q())
}

fn lebesgue_of(basis: &EimBasis, q: usize) -> f64 {
    if q == 0 {
        return 0.0;
    }
    let t = &basis.interp_matrix;
    // columns of T⁻¹ (leading q × q block)
    let tinv: Vec<Vec<f64>> = (0..q)
        .map(|c| {
            let mut e = vec![0.0; q];
            e[c] = 1.0;
            forward(t, &e, q)
        })
        .collect();
    let h = &basis.basis;
    let mut worst: f64 = 0.0;
    for i in 0..h.rows() {
        let hi = &h.row(i)[..q];
        let s: f64 = tinv.iter().map(|col| hi.iter().zip(col).map(|(a, b)| a * b).sum::<f64>().abs()).sum();
        worst = worst.max(s);
    }
    worst
}
