use super::{DenseMatrix, NumError, Result};

const MAX_SWEEPS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenpairs of a symmetric matrix, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct SymEig {
    pub eigenvalues: Vec<f64>,
    /// Orthogonal; column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: DenseMatrix,
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Ties in the eigenvalue ordering keep the order in which the diagonal
/// entries converged. Each eigenvector is signed so that its entry of largest
/// magnitude is positive.
pub fn sym_eig(c: &DenseMatrix) -> Result<SymEig> {
    if c.is_empty() {
        return Err(NumError::Empty);
    }
    if !c.is_square() {
        return Err(NumError::NotSquare {
            rows: c.rows(),
            cols: c.cols(),
        });
    }
    let (gap, row, col) = c.asymmetry();
    if gap > SYMMETRY_TOL * c.max_abs() {
        return Err(NumError::Asymmetric { row, col, gap });
    }
    let n = c.rows();
    // Symmetrized working copy.
    let mut a = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (c.get(i, j) + c.get(j, i)));
    let mut w = DenseMatrix::identity(n);

    let mut converged = n == 1;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a.get(i, j).powi(2))
            .sum();
        let diag: f64 = (0..n).map(|i| a.get(i, i).powi(2)).sum();
        if off <= (f64::EPSILON * f64::EPSILON) * diag || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, cs * akp - sn * akq);
                    a.set(k, q, sn * akp + cs * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, cs * apk - sn * aqk);
                    a.set(q, k, sn * apk + cs * aqk);
                }
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for k in 0..n {
                    let wkp = w.get(k, p);
                    let wkq = w.get(k, q);
                    w.set(k, p, cs * wkp - sn * wkq);
                    w.set(k, q, sn * wkp + cs * wkq);
                }
            }
        }
    }
    if !converged {
        return Err(NumError::NotConverged {
            what: "Jacobi eigenvalue iteration",
            iterations: MAX_SWEEPS,
        });
    }

    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap());
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let mut eigenvectors = w.select_columns(&order);
    for j in 0..n {
        let mut imax = 0;
        for i in 1..n {
            if eigenvectors.get(i, j).abs() > eigenvectors.get(imax, j).abs() + 1e-14 {
                imax = i;
            }
        }
        if eigenvectors.get(imax, j) < 0.0 {
            for i in 0..n {
                eigenvectors.set(i, j, -eigenvectors.get(i, j));
            }
        }
    }
    Ok(SymEig {
        eigenvalues,
        eigenvectors,
    })
}
