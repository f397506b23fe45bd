//! EIM on the Gaussian source of the Poisson problem, and the reduced model
//! whose right-hand side uses the interpolated source.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{eim_build, eim_coefficients, EimBasis, EimOptions, FunctionSamples, Result};
use crate::fom::{assemble_gaussian_poisson, gaussian_forcing, AffineSystem, GaussianPoisson, ThetaMap};
use crate::numkit::{dot, LinearOperator};
use crate::rb::{pod, project, rom_solve, PodCriterion, SnapshotSet};

#[derive(Clone, Debug)]
pub struct GaussianDemoConfig {
    /// Elements per side.
    pub grid: usize,
    pub alpha_t: f64,
    pub n_train: usize,
    pub eim: EimOptions,
    pub seed: u64,
}

impl Default for GaussianDemoConfig {
    fn default() -> Self {
        Self {
            grid: 32,
            alpha_t: 1.0,
            n_train: 100,
            eim: EimOptions {
                tol: 1e-12,
                n_max: 30,
                ..EimOptions::default()
            },
            seed: 42,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GaussianDemo {
    pub fom: GaussianPoisson,
    pub training: Vec<Vec<f64>>,
    pub samples: FunctionSamples,
    pub eim: EimBasis,
}

/// Samples the source at every grid node for `n_train` uniform random
/// centers and runs EIM on the result.
pub fn build(config: &GaussianDemoConfig) -> Result<GaussianDemo> {
    let fom = assemble_gaussian_poisson(config.grid, config.alpha_t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let training = fom.system.domain().sample_uniform(config.n_train, &mut rng);
    let points: Vec<Vec<f64>> = fom.nodes().iter().map(|x| x.to_vec()).collect();
    let samples = FunctionSamples::from_fn(points, training.clone(), |x, mu| gaussian_forcing([x[0], x[1]], mu))?;
    let eim = eim_build(&samples, &config.eim)?;
    Ok(GaussianDemo {
        fom,
        training,
        samples,
        eim,
    })
}

impl GaussianDemo {
    /// Coordinates of the magic points, in selection order.
    pub fn magic_points(&self) -> Vec<[f64; 2]> {
        let nodes = self.fom.nodes();
        self.eim.magic_indices.iter().map(|&i| nodes[i]).collect()
    }

    /// The Poisson system with the source replaced by its `q`-term
    /// interpolant: `f_k = ∫ h_k v` and `Θ_f(μ) = T⁻¹ g(x_magic; μ)`.
    pub fn affine_system(&self, q: usize) -> Result<AffineSystem> {
        let eim = Arc::new(self.eim.truncated(q));
        let rhs: Vec<Vec<f64>> = (0..eim.q()).map(|k| self.fom.load_from_nodal(&eim.basis.column(k))).collect();
        let nodes = self.fom.nodes();
        let magic: Vec<[f64; 2]> = eim.magic_indices.iter().map(|&i| nodes[i]).collect();
        let qn = eim.q();
        let theta = ThetaMap::custom("eim_gaussian", qn, move |mu| {
            let g: Vec<f64> = magic.iter().map(|&x| gaussian_forcing(x, mu)).collect();
            eim_coefficients(&eim, &g).expect("length matches")
        });
        Ok(self.fom.system.clone().with_rhs(rhs, theta)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RomErrorRow {
    pub n: usize,
    /// Mean over the test set of `‖u_h − 𝕍u_N‖ / ‖u_h‖` in the gram norm.
    pub mean_rel_error: f64,
    pub max_rel_error: f64,
}

/// Reduced-model error against the exact-source truth for each basis size
/// in `sizes`, with the source interpolated by `q_eim` terms.
///
/// The basis is the POD of truth snapshots at the training centers.
pub fn rom_error_sweep(demo: &GaussianDemo, q_eim: usize, sizes: &[usize], test: &[Vec<f64>]) -> Result<Vec<RomErrorRow>> {
    let fom = &demo.fom;
    let gram = fom.system.gram();
    let snaps: Vec<Vec<f64>> = demo
        .training
        .par_iter()
        .map(|mu| fom.solve_exact(mu))
        .collect::<std::result::Result<_, _>>()?;
    let n_max = sizes.iter().copied().max().unwrap_or(0);
    let basis = pod(
        &SnapshotSet::from_columns(&snaps, demo.training.clone())?,
        gram,
        PodCriterion::Rank(n_max),
    )?;
    let system = demo.affine_system(q_eim)?;
    let truths: Vec<Vec<f64>> = test
        .par_iter()
        .map(|mu| fom.solve_exact(mu))
        .collect::<std::result::Result<_, _>>()?;
    let gnorm = |v: &[f64]| dot(v, &gram.apply(v)).max(0.0).sqrt();
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let rom = project(&system, &basis.truncated(n))?;
        let errs: Vec<f64> = test
            .par_iter()
            .zip(&truths)
            .map(|(mu, truth)| -> Result<f64> {
                let u = rom.lift(&rom_solve(&rom, mu)?.coefficients)?;
                let e: Vec<f64> = truth.iter().zip(&u).map(|(a, b)| a - b).collect();
                Ok(gnorm(&e) / gnorm(truth))
            })
            .collect::<Result<_>>()?;
        rows.push(RomErrorRow {
            n,
            mean_rel_error: errs.iter().sum::<f64>() / errs.len().max(1) as f64,
            max_rel_error: errs.iter().copied().fold(0.0, f64::max),
        });
    }
    Ok(rows)
}
