use super::dense::{dot, norm2};
use super::{DenseMatrix, NumError, Result};

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `a = U · diag(σ) · Zᵀ`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    /// `m × k` with orthonormal columns, `k = min(m, n)`.
    pub left_vectors: DenseMatrix,
    /// Non-negative, descending.
    pub singular_values: Vec<f64>,
    /// `n × k` with orthonormal columns.
    pub right_vectors: DenseMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.left_vectors.clone();
        for i in 0..us.rows() {
            for (j, s) in self.singular_values.iter().enumerate() {
                us.set(i, j, us.get(i, j) * s);
            }
        }
        us.matmul(&self.right_vectors.transpose())
            .expect("svd factors have consistent shapes")
    }

    /// Numerical rank with relative cutoff `rel_tol · σ₁`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let cutoff = rel_tol * self.singular_values.first().copied().unwrap_or(0.0);
        self.singular_values.iter().filter(|&&s| s > cutoff).count()
    }
}

/// SVD by one-sided (Hestenes) Jacobi rotations.
pub fn svd(a: &DenseMatrix) -> Result<SvdResult> {
    if a.is_empty() {
        return Err(NumError::Empty);
    }
    if a.rows() < a.cols() {
        let t = svd(&a.transpose())?;
        return Ok(SvdResult {
            left_vectors: t.right_vectors,
            singular_values: t.singular_values,
            right_vectors: t.left_vectors,
        });
    }
    let (m, n) = (a.rows(), a.cols());
    // Work column-wise: cols[j] holds column j of A·V as it is rotated.
    let mut cols = a.columns();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(NumError::NotConverged {
            what: "one-sided Jacobi SVD",
            iterations: MAX_SWEEPS,
        });
    }

    let norms: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps input order among equal singular values.
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let sigma_max = norms[order[0]];
    let cutoff = sigma_max * (m.max(n) as f64) * f64::EPSILON;
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut sigmas = Vec::with_capacity(n);
    let mut v_cols = Vec::with_capacity(n);
    for &j in &order {
        let s = norms[j];
        v_cols.push(v[j].clone());
        if s > cutoff && s > 0.0 {
            sigmas.push(s);
            u_cols.push(cols[j].iter().map(|x| x / s).collect());
        } else {
            sigmas.push(if s > cutoff { s } else { 0.0 });
            u_cols.push(Vec::new());
        }
    }
    complete_orthonormal(&mut u_cols, m);

    Ok(SvdResult {
        left_vectors: DenseMatrix::from_columns(&u_cols)?,
        singular_values: sigmas,
        right_vectors: DenseMatrix::from_columns(&v_cols)?,
    })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Fills empty entries of `cols` with unit vectors orthonormal to the rest.
fn complete_orthonormal(cols: &mut [Vec<f64>], m: usize) {
    let mut candidate = 0usize;
    for j in 0..cols.len() {
        if !cols[j].is_empty() {
            continue;
        }
        loop {
            assert!(candidate < m, "ran out of completion candidates");
            let mut e = vec![0.0; m];
            e[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for c in cols.iter().filter(|c| !c.is_empty()) {
                    let proj = dot(c, &e);
                    e.iter_mut().zip(c).for_each(|(x, y)| *x -= proj * y);
                }
            }
            let nrm = norm2(&e);
            if nrm > 1e-3 {
                e.iter_mut().for_each(|x| *x /= nrm);
                cols[j] = e;
                break;
            }
        }
    }
}
