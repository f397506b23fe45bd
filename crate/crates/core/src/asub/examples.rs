use crate::numkit::{dot, DenseMatrix};

/// `f(μ) = ½ μᵀ A μ` with symmetric `A`.
///
/// For `μ` uniform on `[-1, 1]^p` the gradient covariance is `A² / 3`.
#[derive(Clone, Debug)]
pub struct QuadraticForm {
    pub a: DenseMatrix,
}

impl QuadraticForm {
    /// `½ ‖μ‖²`; every direction is equally important.
    pub fn paraboloid(p: usize) -> Self {
        Self {
            a: DenseMatrix::identity(p),
        }
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        Self {
            a: DenseMatrix::diag(entries),
        }
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn value(&self, mu: &[f64]) -> f64 {
        0.5 * dot(mu, &self.gradient(mu))
    }

    pub fn gradient(&self, mu: &[f64]) -> Vec<f64> {
        self.a.matvec(mu).expect("parameter length matches A")
    }

    /// `A² / 3`, the covariance under the uniform measure on `[-1, 1]^p`.
    pub fn exact_covariance(&self) -> DenseMatrix {
        let mut c = self.a.matmul(&self.a).expect("square");
        c.scale(1.0 / 3.0);
        c
    }
}
