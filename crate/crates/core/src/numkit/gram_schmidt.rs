use super::sparse::LinearOperator;
use super::DenseMatrix;

/// A vector whose norm after projection falls below this fraction of its
/// norm before projection is treated as lying in the span of the basis.
pub const DEFLATION_RATIO: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum Orthonormalization {
    /// Unit vector in the `gram` norm, orthogonal to every basis column.
    Accepted(Vec<f64>),
    /// The candidate is numerically in the span of the basis.
    Deflated { residual_ratio: f64 },
}

impl Orthonormalization {
    pub fn accepted(self) -> Option<Vec<f64>> {
        match self {
            Self::Accepted(v) => Some(v),
            Self::Deflated { .. } => None,
        }
    }
}

/// Modified Gram–Schmidt against the columns of `basis` in the `gram` inner
/// product, applied twice.
///
/// `basis` columns must already be orthonormal in `gram`. A basis with zero
/// columns is allowed.
pub fn orthonormalize(v: &[f64], basis: &DenseMatrix, gram: &dyn LinearOperator) -> Orthonormalization {
    assert_eq!(v.len(), gram.dim(), "candidate length must match the inner product");
    let before = gram.norm(v);
    if before == 0.0 {
        return Orthonormalization::Deflated { residual_ratio: 0.0 };
    }
    let mut w = v.to_vec();
    let cols: Vec<Vec<f64>> = if basis.cols() == 0 { Vec::new() } else { basis.columns() };
    for _ in 0..2 {
        for c in &cols {
            let proj = gram.inner(c, &w);
            w.iter_mut().zip(c).for_each(|(x, y)| *x -= proj * y);
        }
    }
    let after = gram.norm(&w);
    let ratio = after / before;
    if ratio < DEFLATION_RATIO {
        return Orthonormalization::Deflated { residual_ratio: ratio };
    }
    w.iter_mut().for_each(|x| *x /= after);
    Orthonormalization::Accepted(w)
}
