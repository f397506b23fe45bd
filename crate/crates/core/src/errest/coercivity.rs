use super::{ErrestError, Result};
use crate::fom::AffineSystem;
use crate::numkit::{smallest_generalized_eigenvalue, BandCholesky, CsrMatrix};
use crate::rb::probe;

/// Min-theta lower bound data for a parametrically coercive system.
#[derive(Clone, Debug, PartialEq)]
pub struct CoercivityModel {
    pub reference: Vec<f64>,
    pub reference_thetas: Vec<f64>,
    /// Smallest eigenvalue of `(A(μ̄), G)`.
    pub alpha_reference: f64,
    /// Every `A_q` passed the semidefiniteness check.
    pub positive_terms: Vec<bool>,
}

impl CoercivityModel {
    /// Checks the affine terms and computes `α_h(μ̄)` once.
    pub fn new(system: &AffineSystem, reference: &[f64]) -> Result<Self> {
        system.domain().check(reference)?;
        let thetas = system.theta_a().eval(reference)?;
        if let Some((index, &value)) = thetas.iter().enumerate().find(|(_, t)| **t <= 0.0) {
            return Err(ErrestError::NonPositiveTheta {
                index,
                mu: reference.to_vec(),
                value,
            });
        }
        let mut positive_terms = Vec::with_capacity(system.q_a());
        for (q, a) in system.matrix_terms().iter().enumerate() {
            if !is_psd(a) {
                return Err(ErrestError::IndefiniteTerm(q));
            }
            positive_terms.push(true);
        }
        let a_ref = system.assemble_matrix(reference)?;
        let (alpha, _) = smallest_generalized_eigenvalue(&a_ref, system.gram())?;
        Ok(Self {
            reference: reference.to_vec(),
            reference_thetas: thetas,
            alpha_reference: alpha,
            positive_terms,
        })
    }
}

/// Semidefinite up to a relative shift of `1e-8`; a singular PSD term
/// (a derivative restricted to one subdomain, say) must pass.
fn is_psd(a: &CsrMatrix) -> bool {
    let n = a.nrows();
    let shift = 1e-8 * a.max_abs().max(f64::MIN_POSITIVE);
    let id = CsrMatrix::from_triplets(n, n, &(0..n).map(|i| (i, i, 1.0)).collect::<Vec<_>>());
    match CsrMatrix::linear_combination(&[(1.0, a), (shift, &id)]) {
        Ok(shifted) => BandCholesky::new(&shifted).is_ok(),
        Err(_) => false,
    }
}

/// `α_LB(μ) = α_h(μ̄) min_q Θ_q(μ)/Θ_q(μ̄)`.
pub fn coercivity_lb(model: &CoercivityModel, system: &AffineSystem, mu: &[f64]) -> Result<f64> {
    let thetas = system.theta_a().eval(mu)?;
    probe::alloc(thetas.len());
    let mut ratio = f64::INFINITY;
    for (q, (t, r)) in thetas.iter().zip(&model.reference_thetas).enumerate() {
        if *t <= 0.0 {
            return Err(ErrestError::NonPositiveTheta {
                index: q,
                mu: mu.to_vec(),
                value: *t,
            });
        }
        ratio = ratio.min(t / r);
    }
    Ok(model.alpha_reference * ratio)
}
