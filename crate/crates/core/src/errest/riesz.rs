use std::sync::atomic::{AtomicUsize, Ordering};

use super::{ErrestError, Result};
use crate::fom::AffineSystem;
use crate::numkit::{dot, DenseMatrix};
use crate::rb::{probe, ReducedBasis};

static NEGATIVE_CLAMPS: AtomicUsize = AtomicUsize::new(0);

/// How often [`residual_dual_norm_quadratic`] has clamped a negative
/// quadratic form to zero in this process.
pub fn negative_clamp_count() -> usize {
    NEGATIVE_CLAMPS.load(Ordering::Relaxed)
}

/// Which functional a representer belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResidualTerm {
    /// `f_i`, coefficient `Θ_f^i(μ)`.
    Load { i: usize },
    /// `−A_i ζ^n`, coefficient `u_N,n Θ_a^i(μ)`.
    Operator { i: usize, n: usize },
}

/// Riesz representers of the residual expansion and their inner products.
///
/// Terms are ordered `f_1 … f_Qf`, then `A_1 ζ^1 … A_Qa ζ^1`, `A_1 ζ^2`, ….
#[derive(Clone, Debug)]
pub struct ResidualOffline {
    pub riesz_vectors: Vec<Vec<f64>>,
    /// `r̂_jᵀ G r̂_k`.
    pub cross_gram: DenseMatrix,
    pub terms: Vec<ResidualTerm>,
    /// `R` with `RᵀR = cross_gram`, from a gram-orthogonal factorization of
    /// the representers themselves, so `‖R c‖` does not square round-off.
    factor: DenseMatrix,
    n: usize,
    q_a: usize,
    q_f: usize,
}

impl ResidualOffline {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn factor(&self) -> &DenseMatrix {
        &self.factor
    }
}

pub fn riesz_offline(system: &AffineSystem, basis: &ReducedBasis) -> Result<ResidualOffline> {
    if basis.n_dofs() != system.n_dofs() {
        return Err(ErrestError::Dimension {
            context: "basis rows vs system dofs",
            expected: system.n_dofs(),
            got: basis.n_dofs(),
        });
    }
    let n = basis.n();
    let mut terms = Vec::new();
    let mut raw: Vec<Vec<f64>> = Vec::new();
    for (i, f) in system.rhs_terms().iter().enumerate() {
        terms.push(ResidualTerm::Load { i });
        raw.push(f.clone());
    }
    let zetas = if n == 0 { Vec::new() } else { basis.basis.columns() };
    for (k, zeta) in zetas.iter().enumerate() {
        for (i, a) in system.matrix_terms().iter().enumerate() {
            terms.push(ResidualTerm::Operator { i, n: k });
            raw.push(a.matvec(zeta).into_iter().map(|v| -v).collect());
        }
    }
    let gram = system.gram();
    let chol = system.gram_factor();
    let riesz_vectors: Vec<Vec<f64>> = raw
        .iter()
        .map(|b| {
            let mut x = chol.solve(b);
            let gx = gram.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&gx).map(|(p, q)| p - q).collect();
            chol.solve(&r).iter().zip(x.iter_mut()).for_each(|(d, v)| *v += d);
            x
        })
        .collect();
    let m = riesz_vectors.len();
    let mut cross_gram = DenseMatrix::from_fn(m, m, |j, k| dot(&riesz_vectors[j], &raw[k]));
    for j in 0..m {
        for k in 0..j {
            let avg = 0.5 * (cross_gram.get(j, k) + cross_gram.get(k, j));
            cross_gram.set(j, k, avg);
            cross_gram.set(k, j, avg);
        }
    }
    let factor = gram_qr_factor(&riesz_vectors, gram);
    Ok(ResidualOffline {
        riesz_vectors,
        cross_gram,
        terms,
        factor,
        n,
        q_a: system.q_a(),
        q_f: system.q_f(),
    })
}

/// Upper-trapezoidal `R` of a gram-orthonormal factorization `[r̂] = Q R`
/// (Gram–Schmidt applied twice). Columns that add nothing beyond round-off
/// get no new row.
fn gram_qr_factor(vectors: &[Vec<f64>], gram: &crate::numkit::CsrMatrix) -> DenseMatrix {
    let m = vectors.len();
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut gq: Vec<Vec<f64>> = Vec::new();
    let mut r_cols: Vec<Vec<f64>> = Vec::with_capacity(m);
    for v in vectors {
        let mut w = v.clone();
        let mut coeffs = vec![0.0; q.len()];
        for _ in 0..2 {
            for (k, (qk, gqk)) in q.iter().zip(&gq).enumerate() {
                let c = dot(gqk, &w);
                coeffs[k] += c;
                w.iter_mut().zip(qk).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm_v = dot(v, &gram.matvec(v)).max(0.0).sqrt();
        let gw = gram.matvec(&w);
        let rho = dot(&w, &gw).max(0.0).sqrt();
        if rho > 1e-14 * norm_v {
            coeffs.push(rho);
            q.push(w.iter().map(|x| x / rho).collect());
            gq.push(gw.iter().map(|x| x / rho).collect());
        }
        r_cols.push(coeffs);
    }
    let rank = q.len();
    DenseMatrix::from_fn(rank, m, |i, j| r_cols[j].get(i).copied().unwrap_or(0.0))
}

/// `(Θ_f(μ), −u_N ⊗ Θ_a(μ))` in representer order.
fn coefficients(offline: &ResidualOffline, system: &AffineSystem, mu: &[f64], u_n: &[f64]) -> Result<Vec<f64>> {
    if u_n.len() != offline.n {
        return Err(ErrestError::Dimension {
            context: "reduced solution length",
            expected: offline.n,
            got: u_n.len(),
        });
    }
    let tf = system.theta_f().eval(mu)?;
    let ta = system.theta_a().eval(mu)?;
    probe::alloc(tf.len());
    probe::alloc(ta.len());
    let len = offline.q_f + offline.n * offline.q_a;
    probe::alloc(len);
    let mut c = Vec::with_capacity(len);
    c.extend_from_slice(&tf);
    for &u in u_n {
        c.extend(ta.iter().map(|t| u * t));
    }
    Ok(c)
}

/// `‖r(·; μ)‖_{V'}` for the reduced solution `u_n`.
///
/// Evaluated as `‖R c‖₂` with the stored factor, which is accurate down to
/// machine precision relative to the load; the literal quadratic form is
/// [`residual_dual_norm_quadratic`].
pub fn residual_dual_norm(offline: &ResidualOffline, system: &AffineSystem, mu: &[f64], u_n: &[f64]) -> Result<f64> {
    let c = coefficients(offline, system, mu, u_n)?;
    let r = &offline.factor;
    probe::alloc(r.rows());
    let mut sum = 0.0;
    for i in 0..r.rows() {
        let v = dot(r.row(i), &c);
        sum += v * v;
    }
    Ok(sum.sqrt())
}

/// `sqrt(cᵀ C c)` with the cross gram `C`; a negative value from
/// cancellation is clamped to zero and counted.
pub fn residual_dual_norm_quadratic(
    offline: &ResidualOffline,
    system: &AffineSystem,
    mu: &[f64],
    u_n: &[f64],
) -> Result<f64> {
    let c = coefficients(offline, system, mu, u_n)?;
    let g = &offline.cross_gram;
    let mut q = 0.0;
    for j in 0..c.len() {
        q += c[j] * dot(g.row(j), &c);
    }
    if q < 0.0 {
        NEGATIVE_CLAMPS.fetch_add(1, Ordering::Relaxed);
        return Ok(0.0);
    }
    Ok(q.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fom::{assemble_thermal_block, fom_solve, ParamDomain, ThetaMap};
    use crate::numkit::{CsrMatrix, LinearOperator};
    use crate::rb::{project, rom_solve};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn basis(sys: &AffineSystem, mus: &[f64], extra: usize) -> ReducedBasis {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut b = DenseMatrix::zeros(sys.n_dofs(), 0);
        let mut cands: Vec<Vec<f64>> = mus.iter().map(|&m| fom_solve(sys, &[m]).unwrap().coefficients).collect();
        for _ in 0..extra {
            cands.push((0..sys.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect());
        }
        for c in cands {
            if let Some(z) = crate::numkit::orthonormalize(&c, &b, sys.gram()).accepted() {
                b.append_column(&z).unwrap();
            }
        }
        ReducedBasis {
            basis: b,
            singular_values: vec![],
            selected_parameters: vec![],
        }
    }

    /// `‖G⁻¹(f − A 𝕍u)‖_G` from assembled operators.
    fn direct_dual_norm(sys: &AffineSystem, rb: &ReducedBasis, mu: &[f64], u_n: &[f64]) -> f64 {
        let a = sys.assemble_matrix(mu).unwrap();
        let f = sys.assemble_rhs(mu).unwrap();
        let u = if u_n.is_empty() {
            vec![0.0; sys.n_dofs()]
        } else {
            rb.basis.matvec(u_n).unwrap()
        };
        let r: Vec<f64> = f.iter().zip(a.matvec(&u)).map(|(p, q)| p - q).collect();
        let rhat = sys.gram_factor().solve(&r);
        sys.gram().norm(&rhat)
    }

    #[test]
    fn load_only_norm() {
        let tb = assemble_thermal_block(6, 1.0, 2.0).unwrap();
        let sys = &tb.system;
        let rb = basis(sys, &[], 0);
        let off = riesz_offline(sys, &rb).unwrap();
        assert_eq!(off.terms, vec![ResidualTerm::Load { i: 0 }]);
        let f = &sys.rhs_terms()[0];
        let expected = dot(f, &sys.gram_factor().solve(f)).sqrt();
        let got = residual_dual_norm(&off, sys, &[0.3], &[]).unwrap();
        assert!((got - expected).abs() <= 1e-13 * expected);
        let quad = residual_dual_norm_quadratic(&off, sys, &[0.3], &[]).unwrap();
        assert!((quad - expected).abs() <= 1e-13 * expected);
    }

    #[test]
    fn identity_gram_gives_raw_vectors() {
        let tb = assemble_thermal_block(5, 1.0, 2.0).unwrap();
        let t = &tb.system;
        let n = t.n_dofs();
        let id = CsrMatrix::from_triplets(n, n, &(0..n).map(|i| (i, i, 1.0)).collect::<Vec<_>>());
        let sys = AffineSystem::new(
            t.matrix_terms().to_vec(),
            ThetaMap::ThermalBlock,
            t.rhs_terms().to_vec(),
            ThetaMap::Constant(vec![1.0]),
            id,
            ParamDomain::interval(0.1, 0.9).unwrap(),
        )
        .unwrap();
        let rb = basis(&sys, &[0.5], 1);
        let off = riesz_offline(&sys, &rb).unwrap();
        assert_eq!(off.len(), 1 + 2 * 4);
        assert!(off.riesz_vectors[0].iter().zip(&sys.rhs_terms()[0]).all(|(a, b)| (a - b).abs() < 1e-14));
        let z1 = rb.basis.column(1);
        let a2z = sys.matrix_terms()[2].matvec(&z1);
        assert_eq!(off.terms[7], ResidualTerm::Operator { i: 2, n: 1 });
        for (x, y) in off.riesz_vectors[7].iter().zip(&a2z) {
            assert!((x + y).abs() < 1e-14);
        }
    }

    #[test]
    fn cross_gram_matches_per_mu_riesz_solves() {
        let tb = assemble_thermal_block(8, 1.0, 3.0).unwrap();
        let sys = &tb.system;
        let rb = basis(sys, &[0.2, 0.7], 2);
        let off = riesz_offline(sys, &rb).unwrap();
        assert!(off.cross_gram.is_symmetric(1e-14));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let mu = [rng.gen_range(0.1..0.9)];
            let u_n: Vec<f64> = (0..rb.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let expected = direct_dual_norm(sys, &rb, &mu, &u_n);
            let quad = residual_dual_norm_quadratic(&off, sys, &mu, &u_n).unwrap();
            let stable = residual_dual_norm(&off, sys, &mu, &u_n).unwrap();
            assert!((quad - expected).abs() <= 1e-10 * expected, "{quad} vs {expected}");
            assert!((stable - expected).abs() <= 1e-10 * expected);
        }
        // the factor reproduces the cross gram
        let r = off.factor();
        let rtr = r.transpose().matmul(r).unwrap();
        assert!(rtr.max_abs_diff(&off.cross_gram) <= 1e-12 * off.cross_gram.max_abs());
    }

    #[test]
    fn reduced_solution_residuals() {
        let tb = assemble_thermal_block(8, 1.0, 5.0).unwrap();
        let sys = &tb.system;
        let f_scale = residual_dual_norm(&riesz_offline(sys, &basis(sys, &[], 0)).unwrap(), sys, &[0.4], &[]).unwrap();
        let rb = basis(sys, &[0.4], 0);
        let off = riesz_offline(sys, &rb).unwrap();
        let rom = project(sys, &rb).unwrap();
        let s = rom_solve(&rom, &[0.4]).unwrap();
        assert!(residual_dual_norm(&off, sys, &[0.4], &s.coefficients).unwrap() <= 1e-9 * f_scale);
        // zero coefficients leave the load alone
        let zero = residual_dual_norm(&off, sys, &[0.6], &[0.0]).unwrap();
        let load = residual_dual_norm(&riesz_offline(sys, &basis(sys, &[], 0)).unwrap(), sys, &[0.6], &[]).unwrap();
        assert!((zero - load).abs() <= 1e-14 * load);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rb = basis(sys, &[0.3], 3);
        let off = riesz_offline(sys, &rb).unwrap();
        let rom = project(sys, &rb).unwrap();
        for _ in 0..10 {
            let mu = [rng.gen_range(0.1..0.9)];
            let u_n = rom_solve(&rom, &mu).unwrap().coefficients;
            let expected = direct_dual_norm(sys, &rb, &mu, &u_n);
            let got = residual_dual_norm(&off, sys, &mu, &u_n).unwrap();
            assert!(expected > 1e-6 * f_scale);
            assert!((got - expected).abs() <= 1e-9 * expected, "{got} vs {expected}");
        }
    }

    #[test]
    fn quadratic_form_clamps_and_counts() {
        let tb = assemble_thermal_block(4, 1.0, 1.0).unwrap();
        let sys = &tb.system;
        let mut off = riesz_offline(sys, &basis(sys, &[], 0)).unwrap();
        off.cross_gram.set(0, 0, -1e-30);
        let before = negative_clamp_count();
        assert_eq!(residual_dual_norm_quadratic(&off, sys, &[0.5], &[]).unwrap(), 0.0);
        assert!(negative_clamp_count() > before);
    }
}
