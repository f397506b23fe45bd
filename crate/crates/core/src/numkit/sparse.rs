use super::dense::dot;
use super::{DenseMatrix, NumError, Result};

/// Anything that can act as a symmetric operator on `ℝⁿ` (inner-product
/// matrices, assembled stiffness matrices).
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;

    fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.apply(y))
    }

    fn norm(&self, x: &[f64]) -> f64 {
        self.inner(x, x).max(0.0).sqrt()
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matvec(x).expect("operator dimension")
    }
}

/// The Euclidean inner product on `ℝⁿ`.
#[derive(Clone, Copy, Debug)]
pub struct IdentityOperator(pub usize);

impl LinearOperator for IdentityOperator {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
}

/// Compressed sparse row matrix with sorted column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// explicit zeros are kept so the sparsity pattern is structural.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, j, _) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut slots = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            cols[slots[i]] = j;
            vals[slots[i]] = v;
            slots[i] += 1;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            row.clear();
            row.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            row.sort_by_key(|&(j, _)| j);
            for &(j, v) in &row {
                if indices.len() > indptr[i] && *indices.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense(a: &DenseMatrix) -> Self {
        let mut t = Vec::new();
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                if a.get(i, j) != 0.0 {
                    t.push((i, j, a.get(i, j)));
                }
            }
        }
        Self::from_triplets(a.rows(), a.cols(), &t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            (self.indptr[i]..self.indptr[i + 1]).map(move |k| (i, self.indices[k], self.values[k]))
        })
    }

    /// Structural `(row, col)` pattern in storage order.
    pub fn pattern(&self) -> Vec<(usize, usize)> {
        self.iter().map(|(i, j, _)| (i, j)).collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.indices[self.indptr[i]..self.indptr[i + 1]];
        match row.binary_search(&j) {
            Ok(k) => self.values[self.indptr[i] + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "csr matvec operand length");
        (0..self.nrows)
            .map(|i| {
                (self.indptr[i]..self.indptr[i + 1])
                    .map(|k| self.values[k] * x[self.indices[k]])
                    .sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            d.add_to(i, j, v);
        }
        d
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `Σ wₖ·Mₖ` over matrices of equal shape (patterns are merged).
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> Result<Self> {
        let (first_w, first) = terms.first().ok_or(NumError::Empty)?;
        if terms.len() == 1 {
            return Ok(first.scaled(*first_w));
        }
        let same_pattern = terms
            .iter()
            .all(|(_, m)| m.indptr == first.indptr && m.indices == first.indices);
        if same_pattern {
            let mut out = first.scaled(*first_w);
            for (w, m) in &terms[1..] {
                for (o, v) in out.values.iter_mut().zip(&m.values) {
                    *o += w * v;
                }
            }
            return Ok(out);
        }
        let mut t = Vec::new();
        for (w, m) in terms {
            if (m.nrows, m.ncols) != (first.nrows, first.ncols) {
                return Err(NumError::DimensionMismatch {
                    context: "linear combination shape",
                    expected: first.nrows * first.ncols,
                    got: m.nrows * m.ncols,
                });
            }
            t.extend(m.iter().map(|(i, j, v)| (i, j, w * v)));
        }
        Ok(Self::from_triplets(first.nrows, first.ncols, &t))
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        self.iter().map(|(i, j, _)| i.abs_diff(j)).max().unwrap_or(0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &CsrMatrix) -> f64 {
        let diff = CsrMatrix::linear_combination(&[(1.0, self), (-1.0, other)])
            .expect("same shape");
        diff.max_abs()
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        let tol = rel_tol * self.max_abs();
        self.iter().all(|(i, j, v)| (v - self.get(j, i)).abs() <= tol)
    }

    /// `Aᵀ·x`.
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut out = vec![0.0; self.ncols];
        for (i, j, v) in self.iter() {
            out[j] += v * x[i];
        }
        out
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matvec(x)
    }
}

/// Cholesky factor of a symmetric positive definite banded matrix, stored as
/// the lower band.
#[derive(Clone, Debug)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    // row i holds L[i][i-bw ..= i], left-padded with zeros.
    band: Vec<f64>,
}

impl BandCholesky {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(NumError::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        if a.nrows() == 0 {
            return Err(NumError::Empty);
        }
        let n = a.nrows();
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut band = vec![0.0; n * w];
        for (i, j, v) in a.iter() {
            if j <= i {
                band[i * w + (j + bw - i)] += v;
            }
        }
        for i in 0..n {
            let jlo = i.saturating_sub(bw);
            for j in jlo..=i {
                let klo = jlo.max(j.saturating_sub(bw));
                let mut s = band[i * w + (j + bw - i)];
                for k in klo..j {
                    s -= band[i * w + (k + bw - i)] * band[j * w + (k + bw - j)];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(NumError::NotPositiveDefinite { row: i });
                    }
                    band[i * w + bw] = s.sqrt();
                } else {
                    band[i * w + (j + bw - i)] = s / band[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, band })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "band cholesky right-hand side");
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut y = b.to_vec();
        for i in 0..n {
            let jlo = i.saturating_sub(bw);
            let mut s = y[i];
            for j in jlo..i {
                s -= self.band[i * w + (j + bw - i)] * y[j];
            }
            y[i] = s / self.band[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            let jhi = (i + bw).min(n - 1);
            for j in (i + 1)..=jhi {
                s -= self.band[j * w + (i + bw - j)] * y[j];
            }
            y[i] = s / self.band[i * w + bw];
        }
        y
    }
}

/// Smallest eigenvalue of the symmetric-definite pencil `(a, m)` by inverse
/// iteration, returned with its `m`-normalized eigenvector.
pub fn smallest_generalized_eigenvalue(a: &CsrMatrix, m: &CsrMatrix) -> Result<(f64, Vec<f64>)> {
    const MAX_ITERS: usize = 20_000;
    let chol = BandCholesky::new(a)?;
    let n = a.nrows();
    if m.nrows() != n {
        return Err(NumError::DimensionMismatch {
            context: "generalized eigenproblem mass matrix",
            expected: n,
            got: m.nrows(),
        });
    }
    let mut x = vec![1.0; n];
    let mut lambda = f64::INFINITY;
    let mut stable = 0;
    for _ in 0..MAX_ITERS {
        let mx = m.matvec(&x);
        let mut y = chol.solve(&mx);
        let my = m.matvec(&y);
        let ynorm = dot(&y, &my).sqrt();
        y.iter_mut().for_each(|v| *v /= ynorm);
        let ay = a.matvec(&y);
        let rayleigh = dot(&y, &ay);
        // ‖A y − λ M y‖ relative to ‖A y‖
        let res: f64 = ay
            .iter()
            .zip(&my)
            .map(|(p, q)| (p - rayleigh * q / ynorm).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = dot(&ay, &ay).sqrt();
        let change = (lambda - rayleigh).abs();
        lambda = rayleigh;
        x = y;
        if change <= 1e-15 * lambda.abs() {
            stable += 1;
        } else {
            stable = 0;
        }
        if stable >= 3 && res <= 1e-7 * scale {
            return Ok((lambda, x));
        }
    }
    Err(NumError::NotConverged {
        what: "inverse iteration",
        iterations: MAX_ITERS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::sym_eig;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 3.0), (1, 1, 5.0)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 2), 4.0);
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(m.pattern(), vec![(0, 0), (0, 2), (1, 1)]);
        assert_eq!(m.matvec(&[1.0, 1.0, 1.0]), vec![6.0, 5.0]);
        assert_eq!(m.tr_matvec(&[1.0, 2.0]), vec![2.0, 10.0, 4.0]);
    }

    #[test]
    fn band_cholesky_matches_dense_solve() {
        let a = laplacian_1d(25);
        assert_eq!(a.bandwidth(), 1);
        let chol = BandCholesky::new(&a).unwrap();
        let b: Vec<f64> = (0..25).map(|i| (i as f64 * 0.3).cos()).collect();
        let x = chol.solve(&b);
        let ax = a.matvec(&x);
        for (p, q) in ax.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn band_cholesky_rejects_indefinite() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(BandCholesky::new(&a), Err(NumError::NotPositiveDefinite { row: 1 })));
    }

    #[test]
    fn inverse_iteration_finds_lowest_mode() {
        let n = 40;
        let a = laplacian_1d(n);
        let m = CsrMatrix::from_triplets(n, n, &(0..n).map(|i| (i, i, 1.0)).collect::<Vec<_>>());
        let (lambda, _) = smallest_generalized_eigenvalue(&a, &m).unwrap();
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((lambda - exact).abs() < 1e-13, "{lambda} vs {exact}");
        let e = sym_eig(&a.to_dense()).unwrap();
        assert!((lambda - e.eigenvalues[n - 1]).abs() < 1e-12);
    }

    #[test]
    fn linear_combination_merges_patterns() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0)]);
        let b = CsrMatrix::from_triplets(2, 2, &[(1, 1, 2.0), (0, 0, 1.0)]);
        let c = CsrMatrix::linear_combination(&[(2.0, &a), (3.0, &b)]).unwrap();
        assert_eq!(c.get(0, 0), 5.0);
        assert_eq!(c.get(1, 1), 6.0);
    }
}
