//! Matrix DEIM on the nonlinear diffusion problem: both the non-affine
//! diffusion `A(μ)` and the state-dependent `C(u)` are replaced by sampled
//! expansions, and the reduced Newton iteration never forms a full-size
//! vector.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{mdeim_build, DeimStop, InterpError, MdeimBasis, Result};
use crate::fom::NonlinearFom;
use crate::numkit::{norm2, CsrMatrix, DenseMatrix, IdentityOperator, LuFactor};
use crate::rb::{pod, PodCriterion, ReducedBasis, SnapshotSet};

#[derive(Clone, Debug)]
pub struct MdeimDemoConfig {
    pub grid: usize,
    pub gamma: f64,
    pub source: f64,
    pub n_train: usize,
    /// Reduced basis size `N_u`.
    pub n_rb: usize,
    /// Largest `N_A = N_C` the operator bases are built for.
    pub q_max: usize,
    pub seed: u64,
}

impl Default for MdeimDemoConfig {
    fn default() -> Self {
        Self {
            grid: 16,
            gamma: 1.0,
            source: 1.0,
            n_train: 100,
            n_rb: 10,
            q_max: 10,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MdeimDemo {
    pub fom: NonlinearFom,
    pub training: Vec<Vec<f64>>,
    pub basis: ReducedBasis,
    pub mdeim_a: MdeimBasis,
    pub mdeim_c: MdeimBasis,
}

/// Full Newton snapshots at `n_train` random μ, POD for the state, and
/// M-DEIM for `A(μ_j)` and `C(u_j)`.
pub fn build(config: &MdeimDemoConfig) -> Result<MdeimDemo> {
    let fom = NonlinearFom::new(config.grid, config.gamma, config.source)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let training = fom.domain.sample_uniform(config.n_train, &mut rng);
    let zero = vec![0.0; fom.n_dofs()];
    let snaps: Vec<Vec<f64>> = training
        .par_iter()
        .map(|mu| fom.solve(mu, &zero))
        .collect::<std::result::Result<_, _>>()?;
    let basis = pod(
        &SnapshotSet::from_columns(&snaps, training.clone())?,
        &IdentityOperator(fom.n_dofs()),
        PodCriterion::Rank(config.n_rb),
    )?;
    let (a_ops, c_ops): (Vec<CsrMatrix>, Vec<CsrMatrix>) =
        training.par_iter().zip(&snaps).map(|(mu, u)| fom.operator_snapshot(u, mu)).unzip();
    let mdeim_a = mdeim_build(&a_ops, DeimStop::AtMost(config.q_max))?;
    let mdeim_c = mdeim_build(&c_ops, DeimStop::AtMost(config.q_max))?;
    Ok(MdeimDemo {
        fom,
        training,
        basis,
        mdeim_a,
        mdeim_c,
    })
}

/// Reduced operators for one choice of `N_u` and `N_A = N_C = q`.
#[derive(Clone, Debug)]
pub struct HyperReducedModel {
    mdeim_a: MdeimBasis,
    mdeim_c: MdeimBasis,
    mass: DenseMatrix,
    a_terms: Vec<DenseMatrix>,
    c_terms: Vec<DenseMatrix>,
    load: Vec<f64>,
    /// Nodes whose state enters the sampled convection entries, with the
    /// matching rows of `V`.
    support: Vec<usize>,
    support_rows: DenseMatrix,
    n: usize,
}

fn galerkin(v: &DenseMatrix, a: &CsrMatrix) -> Result<DenseMatrix> {
    let av = DenseMatrix::from_columns(&v.columns().iter().map(|c| a.matvec(c)).collect::<Vec<_>>())?;
    Ok(v.transpose().matmul(&av)?)
}

impl HyperReducedModel {
    pub fn new(demo: &MdeimDemo, n_rb: usize, q: usize) -> Result<Self> {
        let v = demo.basis.truncated(n_rb).basis;
        let n = v.cols();
        let mdeim_a = demo.mdeim_a.truncated(q)?;
        let mdeim_c = demo.mdeim_c.truncated(q)?;
        let a_terms = (0..mdeim_a.q())
            .map(|k| galerkin(&v, &mdeim_a.mode_matrix(k)))
            .collect::<Result<Vec<_>>>()?;
        let c_terms = (0..mdeim_c.q())
            .map(|k| galerkin(&v, &mdeim_c.mode_matrix(k)))
            .collect::<Result<Vec<_>>>()?;
        let fom = &demo.fom;
        let support = fom.entry_support(&mdeim_c.magic_entries);
        let dofs: Vec<usize> = support.iter().map(|&k| fom.dofs.dof(k).expect("free node")).collect();
        Ok(Self {
            mass: galerkin(&v, fom.mass())?,
            load: v.tr_matvec(fom.load())?,
            support_rows: v.select_rows(&dofs),
            support,
            a_terms,
            c_terms,
            mdeim_a,
            mdeim_c,
            n,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> (usize, usize) {
        (self.mdeim_a.q(), self.mdeim_c.q())
    }

    /// Reduced matrix `VᵀMV + Σ c^A_q VᵀA_qV + Σ c^C_q(a) VᵀC_qV`, given the
    /// diffusion coefficients for the current μ.
    fn matrix(&self, fom: &NonlinearFom, ca: &[f64], a: &[f64]) -> Result<DenseMatrix> {
        let us = self.support_rows.matvec(a)?;
        let lookup = |node: usize| self.support.binary_search(&node).map_or(0.0, |p| us[p]);
        let cc = self
            .mdeim_c
            .coefficients(&fom.convection_entries(&self.mdeim_c.magic_entries, lookup))?;
        let mut k = self.mass.clone();
        for (c, t) in ca.iter().zip(&self.a_terms) {
            k.axpy(*c, t)?;
        }
        for (c, t) in cc.iter().zip(&self.c_terms) {
            k.axpy(*c, t)?;
        }
        Ok(k)
    }

    fn residual(&self, fom: &NonlinearFom, ca: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.matrix(fom, ca, a)?.matvec(a)?;
        for (x, f) in r.iter_mut().zip(&self.load) {
            *x -= f;
        }
        Ok(r)
    }

    /// Reduced Newton with a central-difference Jacobian; returns the
    /// reduced coefficients.
    pub fn solve(&self, fom: &NonlinearFom, mu: &[f64]) -> Result<Vec<f64>> {
        fom.domain.check(mu)?;
        let ca = self
            .mdeim_a
            .coefficients(&fom.diffusion_entries(mu, &self.mdeim_a.magic_entries))?;
        let n = self.n;
        let tol = 1e-11 * norm2(&self.load).max(f64::MIN_POSITIVE);
        let mut a = vec![0.0; n];
        let mut r = self.residual(fom, &ca, &a)?;
        let mut rn = norm2(&r);
        for _ in 0..50 {
            if rn <= tol {
                return Ok(a);
            }
            let h = 1e-6 * norm2(&a).max(1.0);
            let mut jac = DenseMatrix::zeros(n, n);
            let mut ap = a.clone();
            for c in 0..n {
                ap[c] = a[c] + h;
                let rp = self.residual(fom, &ca, &ap)?;
                ap[c] = a[c] - h;
                let rm = self.residual(fom, &ca, &ap)?;
                ap[c] = a[c];
                for i in 0..n {
                    jac.set(i, c, (rp[i] - rm[i]) / (2.0 * h));
                }
            }
            let da = LuFactor::new(&jac)?.solve(&r)?;
            let mut step = 1.0;
            loop {
                let trial: Vec<f64> = a.iter().zip(&da).map(|(x, d)| x - step * d).collect();
                let rt = self.residual(fom, &ca, &trial)?;
                let rtn = norm2(&rt);
                if rtn < rn || step < 1e-4 {
                    a = trial;
                    r = rt;
                    rn = rtn;
                    break;
                }
                step *= 0.5;
            }
        }
        if rn <= tol {
            Ok(a)
        } else {
            Err(InterpError::NewtonStalled {
                residual: rn,
                mu: mu.to_vec(),
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MdeimErrorRow {
    /// `N_A = N_C`.
    pub q: usize,
    /// Mean of `‖u_h − V a‖₂ / ‖u_h‖₂` over the test set.
    pub mean_rel_error: f64,
    pub max_rel_error: f64,
}

/// Lifted hyper-reduced solutions against full Newton solves, for each
/// operator basis size in `qs` at fixed `N_u = n_rb`.
pub fn error_sweep(demo: &MdeimDemo, n_rb: usize, qs: &[usize], test: &[Vec<f64>]) -> Result<Vec<MdeimErrorRow>> {
    let fom = &demo.fom;
    let zero = vec![0.0; fom.n_dofs()];
    let truths: Vec<Vec<f64>> = test
        .par_iter()
        .map(|mu| fom.solve(mu, &zero))
        .collect::<std::result::Result<_, _>>()?;
    let v = demo.basis.truncated(n_rb).basis;
    qs.iter()
        .map(|&q| {
            let model = HyperReducedModel::new(demo, n_rb, q)?;
            let errs: Vec<f64> = test
                .par_iter()
                .zip(&truths)
                .map(|(mu, truth)| -> Result<f64> {
                    let u = v.matvec(&model.solve(fom, mu)?)?;
                    let e: Vec<f64> = truth.iter().zip(&u).map(|(a, b)| a - b).collect();
                    Ok(norm2(&e) / norm2(truth))
                })
                .collect::<Result<_>>()?;
            Ok(MdeimErrorRow {
                q,
                mean_rel_error: errs.iter().sum::<f64>() / errs.len().max(1) as f64,
                max_rel_error: errs.iter().copied().fold(0.0, f64::max),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> MdeimDemo {
        build(&MdeimDemoConfig {
            grid: 8,
            n_train: 30,
            n_rb: 6,
            q_max: 6,
            ..MdeimDemoConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn sampled_entries_reproduce_training_operators() {
        let demo = small();
        let fom = &demo.fom;
        let mu = &demo.training[3];
        let a = fom.diffusion_matrix(mu);
        let direct = fom.diffusion_entries(mu, &demo.mdeim_a.magic_entries);
        assert_eq!(direct, demo.mdeim_a.sample(&a));
        // the support rows carry everything the convection entries read
        let u = fom.solve(mu, &vec![0.0; fom.n_dofs()]).unwrap();
        let c = fom.convection_matrix(&u);
        let nodal = fom.dofs.to_nodal(&u);
        let sampled = fom.convection_entries(&demo.mdeim_c.magic_entries, |k| nodal[k]);
        for (x, y) in sampled.iter().zip(demo.mdeim_c.sample(&c)) {
            assert!((x - y).abs() <= 1e-14 * c.max_abs());
        }
    }

    #[test]
    fn reduced_model_at_full_rank_matches_galerkin_newton() {
        // with N_u = n and every operator mode kept, a training truth solves
        // the reduced equations exactly
        let demo = build(&MdeimDemoConfig {
            grid: 5,
            n_train: 40,
            n_rb: 16,
            q_max: 40,
            ..MdeimDemoConfig::default()
        })
        .unwrap();
        let fom = &demo.fom;
        let mu = demo.training[0].clone();
        let model = HyperReducedModel::new(&demo, 16, 40).unwrap();
        let v = demo.basis.basis.clone();
        let u = v.matvec(&model.solve(fom, &mu).unwrap()).unwrap();
        let truth = fom.solve(&mu, &vec![0.0; fom.n_dofs()]).unwrap();
        let err = norm2(&u.iter().zip(&truth).map(|(a, b)| a - b).collect::<Vec<_>>()) / norm2(&truth);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn error_decreases_with_operator_terms() {
        let demo = small();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let test = demo.fom.domain.sample_uniform(4, &mut rng);
        let rows = error_sweep(&demo, 6, &[1, 6], &test).unwrap();
        assert!(rows[1].mean_rel_error < rows[0].mean_rel_error, "{rows:?}");
    }
}
