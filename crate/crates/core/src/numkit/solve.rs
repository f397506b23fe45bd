use super::dense::norm2;
use super::{DenseMatrix, NumError, Result};

/// Relative pivot threshold below which a matrix is declared singular.
const PIVOT_TOL: f64 = 1e-13;

/// LU factorization with partial pivoting, `P·A = L·U` packed in one matrix.
#[derive(Clone, Debug)]
pub struct LuFactor {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl LuFactor {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        Self::banded(a, usize::MAX, usize::MAX)
    }

    /// Factorization that only touches entries within `lower` sub-diagonals
    /// and `upper` super-diagonals (plus pivoting fill).
    pub fn banded(a: &DenseMatrix, lower: usize, upper: usize) -> Result<Self> {
        if a.is_empty() {
            return Err(NumError::Empty);
        }
        if !a.is_square() {
            return Err(NumError::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let n = a.rows();
        let scale = a.max_abs();
        let threshold = PIVOT_TOL * scale;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let row_end = n.min(k.saturating_add(lower).saturating_add(1));
            let col_end = n.min(k.saturating_add(lower).saturating_add(upper).saturating_add(1));
            let mut p = k;
            let mut best = lu.get(k, k).abs();
            for i in (k + 1)..row_end {
                let v = lu.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= threshold || best == 0.0 {
                return Err(NumError::Singular {
                    step: k,
                    pivot: best,
                });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = lu.get(k, j);
                    lu.set(k, j, lu.get(p, j));
                    lu.set(p, j, tmp);
                }
            }
            let pivot = lu.get(k, k);
            for i in (k + 1)..row_end {
                let lik = lu.get(i, k) / pivot;
                lu.set(i, k, lik);
                if lik == 0.0 {
                    continue;
                }
                for j in (k + 1)..col_end {
                    lu.add_to(i, j, -lik * lu.get(k, j));
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(NumError::DimensionMismatch {
                context: "right-hand side",
                expected: n,
                got: b.len(),
            });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = (0..i).map(|j| row[j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = ((i + 1)..n).map(|j| row[j] * x[j]).sum();
            x[i] = (x[i] - s) / row[i];
        }
        Ok(x)
    }
}

/// Solves `a·x = b` by LU with partial pivoting.
pub fn solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.rows() {
        return Err(NumError::DimensionMismatch {
            context: "right-hand side",
            expected: a.rows(),
            got: b.len(),
        });
    }
    LuFactor::new(a)?.solve(b)
}

/// Solves a banded system with `lower`/`upper` bandwidths.
pub fn solve_banded(a: &DenseMatrix, b: &[f64], lower: usize, upper: usize) -> Result<Vec<f64>> {
    LuFactor::banded(a, lower, upper)?.solve(b)
}

/// Solves an SPD system by dense Cholesky; fails if `a` is not positive definite.
pub fn cholesky_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(NumError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if b.len() != n {
        return Err(NumError::DimensionMismatch {
            context: "right-hand side",
            expected: n,
            got: b.len(),
        });
    }
    let mut l = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l.get(i, k) * l.get(j, k)).sum();
            let v = a.get(i, j) - s;
            if i == j {
                if v <= 0.0 {
                    return Err(NumError::NotPositiveDefinite { row: i });
                }
                l.set(i, i, v.sqrt());
            } else {
                l.set(i, j, v / l.get(j, j));
            }
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l.get(i, k) * y[k]).sum();
        y[i] = (y[i] - s) / l.get(i, i);
    }
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| l.get(k, i) * y[k]).sum();
        y[i] = (y[i] - s) / l.get(i, i);
    }
    Ok(y)
}

/// Least-squares solution of `min ‖a·x − b‖₂` by Householder QR.
///
/// Requires full column rank; a column whose reflected diagonal falls below
/// `1e-12 · ‖a‖_F` is reported as [`NumError::RankDeficient`].
pub fn lstsq(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return Err(NumError::Empty);
    }
    if b.len() != m {
        return Err(NumError::DimensionMismatch {
            context: "least-squares right-hand side",
            expected: m,
            got: b.len(),
        });
    }
    if m < n {
        return Err(NumError::RankDeficient { column: m });
    }
    let tol = 1e-12 * a.frobenius_norm();
    let mut r = a.clone();
    let mut rhs = b.to_vec();
    for k in 0..n {
        let col: Vec<f64> = (k..m).map(|i| r.get(i, k)).collect();
        let alpha = norm2(&col);
        if alpha <= tol {
            return Err(NumError::RankDeficient { column: k });
        }
        let sign = if col[0] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = col;
        v[0] += sign * alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        for j in k..n {
            let s: f64 = (k..m).map(|i| v[i - k] * r.get(i, j)).sum();
            let f = 2.0 * s / vnorm2;
            for i in k..m {
                r.add_to(i, j, -f * v[i - k]);
            }
        }
        let s: f64 = (k..m).map(|i| v[i - k] * rhs[i]).sum();
        let f = 2.0 * s / vnorm2;
        for i in k..m {
            rhs[i] -= f * v[i - k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|j| r.get(i, j) * x[j]).sum();
        x[i] = (rhs[i] - s) / r.get(i, i);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn residual_ok(a: &DenseMatrix, x: &[f64], b: &[f64]) -> bool {
        let ax = a.matvec(x).unwrap();
        let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
        norm2(&r) <= 1e-10 * (a.frobenius_norm() * norm2(x) + norm2(b))
    }

    #[test]
    fn identity_and_diagonal() {
        let b = [1.0, -2.0, 3.5];
        assert_eq!(solve(&DenseMatrix::identity(3), &b).unwrap(), b.to_vec());
        let d = DenseMatrix::diag(&[2.0, 4.0]);
        assert_eq!(solve(&d, &[2.0, 8.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn random_spd_multiply_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = DenseMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
        let mut a = g.transpose().matmul(&g).unwrap();
        a.axpy(0.5, &DenseMatrix::identity(3)).unwrap();
        let b: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        assert!(residual_ok(&a, &solve(&a, &b).unwrap(), &b));
        assert!(residual_ok(&a, &cholesky_solve(&a, &b).unwrap(), &b));
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(solve(&a, &[1.0, 1.0]), Err(NumError::Singular { .. })));
        let z = DenseMatrix::zeros(2, 2);
        assert!(matches!(solve(&z, &[1.0, 1.0]), Err(NumError::Singular { .. })));
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            cholesky_solve(&a, &[1.0, 1.0]),
            Err(NumError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn banded_solver_matches_dense() {
        let n = 30;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = DenseMatrix::from_fn(n, n, |i, j| {
            let d = i as i64 - j as i64;
            if d == 0 {
                4.0
            } else if (-3..=2).contains(&d) {
                rng.gen_range(-1.0..1.0)
            } else {
                0.0
            }
        });
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x_band = solve_banded(&a, &b, 2, 3).unwrap();
        let x_dense = solve(&a, &b).unwrap();
        for (p, q) in x_band.iter().zip(&x_dense) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn least_squares_exact_and_overdetermined() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]]).unwrap();
        // exactly on the line 1 + 2t
        let x = lstsq(&a, &[1.0, 3.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
        // normal equations by hand for b = (0, 1, 0): x = (1/3, 0)
        let x = lstsq(&a, &[0.0, 1.0, 0.0]).unwrap();
        assert!((x[0] - 1.0 / 3.0).abs() < 1e-14 && x[1].abs() < 1e-14);
        let rank1 = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(lstsq(&rank1, &[1.0, 1.0]), Err(NumError::RankDeficient { .. })));
    }
}
