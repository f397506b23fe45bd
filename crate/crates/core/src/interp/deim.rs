use std::collections::HashMap;

use super::{argmax_first, InterpError, Result};
use crate::numkit::{lstsq, svd, CsrMatrix, DenseMatrix, LuFactor, NumError};

/// When the DEIM index loop stops.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DeimStop {
    /// Relative Frobenius reconstruction error of the snapshots.
    Tolerance(f64),
    /// Exactly this many modes.
    Count(usize),
    /// This many modes, or all of them if the snapshots have lower rank.
    AtMost(usize),
}

/// POD modes below this fraction of `σ₁` are never used.
const MODE_CUTOFF: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct DeimBasis {
    /// `H_Q`, orthonormal POD modes.
    pub basis: DenseMatrix,
    pub magic_indices: Vec<usize>,
    /// Relative reconstruction error of the snapshots with `1, 2, …, Q` modes.
    pub error_history: Vec<f64>,
    pub singular_values: Vec<f64>,
    /// Modes above the cutoff.
    pub modes_available: usize,
    sampled_lu: LuFactor,
}

impl DeimBasis {
    pub fn q(&self) -> usize {
        self.magic_indices.len()
    }

    pub fn len(&self) -> usize {
        self.basis.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.rows() == 0
    }

    /// The leading `q` modes and indices.
    pub fn truncated(&self, q: usize) -> Result<Self> {
        let q = q.clamp(1, self.q());
        let basis = self.basis.leading_columns(q);
        let magic_indices = self.magic_indices[..q].to_vec();
        let sampled_lu = LuFactor::new(&basis.select_rows(&magic_indices))?;
        Ok(Self {
            basis,
            magic_indices,
            error_history: self.error_history[..q].to_vec(),
            singular_values: self.singular_values.clone(),
            modes_available: self.modes_available,
            sampled_lu,
        })
    }
}

pub fn deim_build(snapshots: &DenseMatrix, tol: f64) -> Result<DeimBasis> {
    deim_select(snapshots, DeimStop::Tolerance(tol))
}

/// POD of the snapshots followed by the greedy DEIM index selection.
pub fn deim_select(snapshots: &DenseMatrix, stop: DeimStop) -> Result<DeimBasis> {
    match stop {
        DeimStop::Tolerance(t) if !(t > 0.0) => {
            return Err(InterpError::InvalidOption(format!("tol must be positive, got {t}")))
        }
        DeimStop::Count(0) | DeimStop::AtMost(0) => return Err(InterpError::InvalidOption("count must be positive".into())),
        _ => {}
    }
    if snapshots.is_empty() || snapshots.max_abs() == 0.0 {
        return Err(InterpError::ZeroData);
    }
    let s = svd(snapshots)?;
    let available = s.rank(MODE_CUTOFF);
    if let DeimStop::Count(q) = stop {
        if q > available {
            return Err(InterpError::InvalidOption(format!(
                "{q} modes requested, only {available} above the cutoff"
            )));
        }
    }
    let modes = s.left_vectors.leading_columns(available);
    let s_norm = snapshots.frobenius_norm();
    let m = modes.rows();

    let h1 = modes.column(0);
    let (i1, _) = argmax_first(h1.iter().map(|v| v.abs()));
    let mut indices = vec![i1];
    let mut history = vec![reconstruction_error(&modes, &indices, snapshots, s_norm)?];
    loop {
        let q = indices.len();
        let done = match stop {
            DeimStop::Tolerance(t) => history[q - 1] <= t,
            DeimStop::Count(c) | DeimStop::AtMost(c) => q >= c,
        };
        if done || q == available {
            break;
        }
        let hq = modes.leading_columns(q);
        let next = modes.column(q);
        let p_h = hq.select_rows(&indices);
        let rhs: Vec<f64> = indices.iter().map(|&i| next[i]).collect();
        let c = LuFactor::new(&p_h)?.solve(&rhs)?;
        let approx = hq.matvec(&c)?;
        let (ik, _) = argmax_first((0..m).map(|j| (next[j] - approx[j]).abs()));
        debug_assert!(!indices.contains(&ik));
        indices.push(ik);
        history.push(reconstruction_error(&modes, &indices, snapshots, s_norm)?);
    }
    let q = indices.len();
    let basis = modes.leading_columns(q);
    let sampled_lu = LuFactor::new(&basis.select_rows(&indices))?;
    Ok(DeimBasis {
        basis,
        magic_indices: indices,
        error_history: history,
        singular_values: s.singular_values,
        modes_available: available,
        sampled_lu,
    })
}

/// `‖S − H (PᵀH)⁻¹ PᵀS‖_F / ‖S‖_F` for the leading `indices.len()` modes.
fn reconstruction_error(modes: &DenseMatrix, indices: &[usize], s: &DenseMatrix, s_norm: f64) -> Result<f64> {
    let q = indices.len();
    let h = modes.leading_columns(q);
    let lu = LuFactor::new(&h.select_rows(indices))?;
    let mut err = 0.0;
    for j in 0..s.cols() {
        let col = s.column(j);
        let vals: Vec<f64> = indices.iter().map(|&i| col[i]).collect();
        let approx = h.matvec(&lu.solve(&vals)?)?;
        err += col.iter().zip(&approx).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok(err.sqrt() / s_norm)
}

/// `(PᵀH)⁻¹ samples`.
pub fn deim_coefficients(basis: &DeimBasis, samples: &[f64]) -> Result<Vec<f64>> {
    if samples.len() != basis.q() {
        return Err(InterpError::Dimension {
            context: "DEIM samples",
            expected: basis.q(),
            got: samples.len(),
        });
    }
    Ok(basis.sampled_lu.solve(samples)?)
}

/// `H (PᵀH)⁻¹ samples`.
pub fn deim_eval(basis: &DeimBasis, samples: &[f64]) -> Result<Vec<f64>> {
    let c = deim_coefficients(basis, samples)?;
    Ok(basis.basis.matvec(&c)?)
}

/// Least-squares coefficients from `m ≥ Q` sampled rows.
pub fn gappy_fit(basis: &DenseMatrix, indices: &[usize], values: &[f64]) -> Result<Vec<f64>> {
    if indices.len() != values.len() {
        return Err(InterpError::Dimension {
            context: "gappy sample values",
            expected: indices.len(),
            got: values.len(),
        });
    }
    if indices.len() < basis.cols() {
        return Err(InterpError::Dimension {
            context: "gappy sample count (at least the basis size)",
            expected: basis.cols(),
            got: indices.len(),
        });
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= basis.rows()) {
        return Err(InterpError::Dimension {
            context: "gappy sample index",
            expected: basis.rows(),
            got: bad,
        });
    }
    lstsq(&basis.select_rows(indices), values).map_err(|e| match e {
        NumError::RankDeficient { .. } => InterpError::RankDeficient(e),
        other => InterpError::Num(other),
    })
}

/// DEIM over vectorized sparse matrices sharing (the union of) one pattern.
#[derive(Clone, Debug)]
pub struct MdeimBasis {
    pub deim: DeimBasis,
    pub nrows: usize,
    pub ncols: usize,
    /// Vector index `k` is the matrix entry `pattern[k]`.
    pub pattern: Vec<(usize, usize)>,
    /// `(row, col)` of each magic index.
    pub magic_entries: Vec<(usize, usize)>,
    position: HashMap<(usize, usize), usize>,
}

impl MdeimBasis {
    pub fn q(&self) -> usize {
        self.deim.q()
    }

    pub fn truncated(&self, q: usize) -> Result<Self> {
        let deim = self.deim.truncated(q)?;
        let magic_entries = self.magic_entries[..deim.q()].to_vec();
        Ok(Self {
            deim,
            magic_entries,
            ..self.clone()
        })
    }

    /// Values of `a` on the union pattern.
    pub fn vectorize(&self, a: &CsrMatrix) -> Result<Vec<f64>> {
        if a.nrows() != self.nrows || a.ncols() != self.ncols {
            return Err(InterpError::ShapeMismatch(self.nrows, self.ncols, a.nrows(), a.ncols()));
        }
        let mut v = vec![0.0; self.pattern.len()];
        for (r, c, x) in a.iter() {
            match self.position.get(&(r, c)) {
                Some(&k) => v[k] = x,
                None if x == 0.0 => {}
                None => {
                    return Err(InterpError::InvalidOption(format!(
                        "entry ({r}, {c}) lies outside the training pattern"
                    )))
                }
            }
        }
        Ok(v)
    }

    /// Entries of `a` at the magic entries.
    pub fn sample(&self, a: &CsrMatrix) -> Vec<f64> {
        self.magic_entries.iter().map(|&(r, c)| a.get(r, c)).collect()
    }

    pub fn coefficients(&self, samples: &[f64]) -> Result<Vec<f64>> {
        deim_coefficients(&self.deim, samples)
    }

    /// Mode `q` as a sparse matrix.
    pub fn mode_matrix(&self, q: usize) -> CsrMatrix {
        let col = self.deim.basis.column(q);
        let triplets: Vec<(usize, usize, f64)> = self.pattern.iter().zip(&col).map(|(&(r, c), &v)| (r, c, v)).collect();
        CsrMatrix::from_triplets(self.nrows, self.ncols, &triplets)
    }

    /// `Σ c_q H_q` from the sampled entries.
    pub fn reconstruct(&self, samples: &[f64]) -> Result<CsrMatrix> {
        let v = deim_eval(&self.deim, samples)?;
        let triplets: Vec<(usize, usize, f64)> = self.pattern.iter().zip(&v).map(|(&(r, c), &x)| (r, c, x)).collect();
        Ok(CsrMatrix::from_triplets(self.nrows, self.ncols, &triplets))
    }
}

pub fn mdeim_build(operators: &[CsrMatrix], stop: DeimStop) -> Result<MdeimBasis> {
    let first = operators.first().ok_or(InterpError::ZeroData)?;
    let (nrows, ncols) = (first.nrows(), first.ncols());
    for a in operators {
        if a.nrows() != nrows || a.ncols() != ncols {
            return Err(InterpError::ShapeMismatch(nrows, ncols, a.nrows(), a.ncols()));
        }
    }
    let mut pattern: Vec<(usize, usize)> = operators.iter().flat_map(|a| a.pattern()).collect();
    pattern.sort_unstable();
    pattern.dedup();
    let position: HashMap<(usize, usize), usize> = pattern.iter().enumerate().map(|(k, &e)| (e, k)).collect();
    let mut s = DenseMatrix::zeros(pattern.len(), operators.len());
    for (j, a) in operators.iter().enumerate() {
        for (r, c, x) in a.iter() {
            s.set(position[&(r, c)], j, x);
        }
    }
    let deim = deim_select(&s, stop)?;
    let magic_entries = deim.magic_indices.iter().map(|&k| pattern[k]).collect();
    Ok(MdeimBasis {
        deim,
        nrows,
        ncols,
        pattern,
        magic_entries,
        position,
    })
}
