use std::path::Path;

use rayon::prelude::*;

use super::{coercivity_lb, residual_dual_norm, riesz_offline, CoercivityModel, ErrestError, ResidualOffline, Result};
use crate::fom::{fom_solve, AffineSystem};
use crate::io::write_csv;
use crate::numkit::dot;
use crate::rb::{self, rom_solve, ErrorEstimator, OnlineEstimate, ReducedBasis, RomSolution, RomSystem};

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorBounds {
    /// Bound on the energy norm `‖u_h − 𝕍u_N‖_μ`.
    pub delta_en: f64,
    /// Bound on `s_h − s_N`.
    pub delta_s: f64,
    pub residual_norm: f64,
    pub alpha_lb: f64,
    pub solution: RomSolution,
}

/// Online solve followed by `Δ_en = ‖r‖/√α_LB` and `Δ_s = ‖r‖²/α_LB`.
pub fn error_bounds(
    offline: &ResidualOffline,
    model: &CoercivityModel,
    system: &AffineSystem,
    rom: &RomSystem,
    mu: &[f64],
) -> Result<ErrorBounds> {
    if !system.is_compliant() {
        return Err(ErrestError::NotCompliant);
    }
    let solution = rom_solve(rom, mu)?;
    let residual_norm = residual_dual_norm(offline, system, mu, &solution.coefficients)?;
    let alpha_lb = coercivity_lb(model, system, mu)?;
    Ok(ErrorBounds {
        delta_en: residual_norm / alpha_lb.sqrt(),
        delta_s: residual_norm * residual_norm / alpha_lb,
        residual_norm,
        alpha_lb,
        solution,
    })
}

/// Energy-norm bound for the greedy, rebuilding the Riesz data for each
/// basis.
#[derive(Clone, Debug)]
pub struct ResidualEstimator {
    pub model: CoercivityModel,
}

impl ResidualEstimator {
    pub fn new(system: &AffineSystem, reference: &[f64]) -> Result<Self> {
        Ok(Self {
            model: CoercivityModel::new(system, reference)?,
        })
    }
}

impl ErrorEstimator for ResidualEstimator {
    fn prepare<'a>(
        &'a self,
        system: &'a AffineSystem,
        basis: &ReducedBasis,
        rom: &'a RomSystem,
    ) -> rb::Result<Box<dyn OnlineEstimate + 'a>> {
        let offline = riesz_offline(system, basis)?;
        let model = &self.model;
        Ok(Box::new(move |mu: &[f64]| -> rb::Result<f64> {
            let u = rom_solve(rom, mu)?;
            let r = residual_dual_norm(&offline, system, mu, &u.coefficients)?;
            Ok(r / coercivity_lb(model, system, mu)?.sqrt())
        }))
    }
}

/// One row of a bound sweep against full-order truth.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundRecord {
    pub mu: Vec<f64>,
    pub delta_en: f64,
    /// `‖u_h − 𝕍u_N‖_μ` from the assembled operator.
    pub true_error: f64,
    /// `delta_en / true_error` (infinite when the error vanishes).
    pub effectivity: f64,
    pub delta_s: f64,
    pub output_error: f64,
}

pub fn bound_sweep(
    offline: &ResidualOffline,
    model: &CoercivityModel,
    system: &AffineSystem,
    rom: &RomSystem,
    mus: &[Vec<f64>],
) -> Result<Vec<BoundRecord>> {
    mus.par_iter()
        .map(|mu| {
            let b = error_bounds(offline, model, system, rom, mu)?;
            let truth = fom_solve(system, mu)?;
            let u = rom.lift(&b.solution.coefficients)?;
            let e: Vec<f64> = truth.coefficients.iter().zip(&u).map(|(p, q)| p - q).collect();
            let a = system.assemble_matrix(mu)?;
            let true_error = dot(&e, &a.matvec(&e)).max(0.0).sqrt();
            let effectivity = if true_error > 0.0 {
                b.delta_en / true_error
            } else {
                f64::INFINITY
            };
            Ok(BoundRecord {
                mu: mu.clone(),
                delta_en: b.delta_en,
                true_error,
                effectivity,
                delta_s: b.delta_s,
                output_error: truth.output - b.solution.output,
            })
        })
        .collect()
}

/// CSV `mu,delta_en,true_error,effectivity,delta_s` (`mu_1,mu_2,…` for
/// vector parameters).
pub fn write_bound_csv(path: &Path, records: &[BoundRecord]) -> Result<()> {
    let p = records.first().map_or(1, |r| r.mu.len());
    let mut header: Vec<String> = if p == 1 {
        vec!["mu".into()]
    } else {
        (1..=p).map(|k| format!("mu_{k}")).collect()
    };
    header.extend(["delta_en", "true_error", "effectivity", "delta_s"].map(String::from));
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<f64>> = records
        .iter()
        .map(|r| {
            let mut row = r.mu.clone();
            row.extend([r.delta_en, r.true_error, r.effectivity, r.delta_s]);
            row
        })
        .collect();
    write_csv(path, &h, &rows)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fom::{assemble_thermal_block, ParamDomain};
    use crate::io::parse_csv;
    use crate::numkit::DenseMatrix;
    use crate::rb::{greedy, project, GreedyOptions};

    fn thermal_setup(extra: usize) -> (crate::fom::ThermalBlock, ReducedBasis) {
        use rand::{Rng, SeedableRng};
        let tb = assemble_thermal_block(8, 1.0, 5.0).unwrap();
        let sys = &tb.system;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut b = DenseMatrix::zeros(sys.n_dofs(), 0);
        let mut cands = vec![fom_solve(sys, &[0.35]).unwrap().coefficients];
        for _ in 0..extra {
            cands.push((0..sys.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect());
        }
        for c in cands {
            if let Some(z) = crate::numkit::orthonormalize(&c, &b, sys.gram()).accepted() {
                b.append_column(&z).unwrap();
            }
        }
        let rb = ReducedBasis {
            basis: b,
            singular_values: vec![],
            selected_parameters: vec![],
        };
        (tb, rb)
    }

    #[test]
    fn bounds_are_rigorous_on_a_sweep() {
        let (tb, rb) = thermal_setup(3);
        let sys = &tb.system;
        let off = riesz_offline(sys, &rb).unwrap();
        let model = CoercivityModel::new(sys, &[0.5]).unwrap();
        let rom = project(sys, &rb).unwrap();
        let mus = ParamDomain::interval(0.1, 0.9).unwrap().uniform_grid(20);
        for r in bound_sweep(&off, &model, sys, &rom, &mus).unwrap() {
            assert!(r.effectivity >= 1.0 - 1e-10, "{r:?}");
            assert!(r.delta_s >= r.output_error);
            assert!(r.output_error >= -1e-12 * r.delta_s.max(1.0));
        }
    }

    #[test]
    fn exact_coercivity_gives_smaller_bound() {
        let (tb, rb) = thermal_setup(2);
        let sys = &tb.system;
        let off = riesz_offline(sys, &rb).unwrap();
        let model = CoercivityModel::new(sys, &[0.5]).unwrap();
        let rom = project(sys, &rb).unwrap();
        for mu in [0.15, 0.5, 0.8] {
            let b = error_bounds(&off, &model, sys, &rom, &[mu]).unwrap();
            let exact = CoercivityModel::new(sys, &[mu]).unwrap().alpha_reference;
            assert!(b.delta_en >= b.residual_norm / exact.sqrt() * (1.0 - 1e-12));
            assert!((b.delta_s * b.alpha_lb - b.delta_en * b.delta_en * b.alpha_lb).abs() <= 1e-12 * b.delta_s.max(1e-300));
        }
    }

    #[test]
    fn zero_residual_gives_zero_bounds() {
        let (tb, rb) = thermal_setup(0);
        let sys = &tb.system;
        let off = riesz_offline(sys, &rb).unwrap();
        let model = CoercivityModel::new(sys, &[0.5]).unwrap();
        let rom = project(sys, &rb).unwrap();
        let b = error_bounds(&off, &model, sys, &rom, &[0.35]).unwrap();
        assert!(b.delta_en < 1e-12 && b.delta_s < 1e-24);
    }

    #[test]
    fn greedy_with_residual_estimator() {
        let tb = assemble_thermal_block(8, 1.0, 5.0).unwrap();
        let sys = &tb.system;
        let est = ResidualEstimator::new(sys, &[0.5]).unwrap();
        let training = ParamDomain::interval(0.1, 0.9).unwrap().uniform_grid(50);
        let r = greedy(sys, &training, &GreedyOptions::default(), &est).unwrap();
        assert!(r.converged);
        for w in r.history.windows(2) {
            assert!(w[1].max_delta <= w[0].max_delta + 1e-12);
        }
        let off = riesz_offline(sys, &r.basis).unwrap();
        let recs = bound_sweep(&off, &est.model, sys, &r.rom, &training).unwrap();
        let worst = recs.iter().map(|x| x.true_error).fold(0.0, f64::max);
        // the converged basis is exact up to round-off, where neither the
        // bound nor the full-order truth resolves anything below ~1e-14
        let scale = training
            .iter()
            .map(|mu| {
                let u = fom_solve(sys, mu).unwrap().coefficients;
                dot(&u, &sys.assemble_matrix(mu).unwrap().matvec(&u)).sqrt()
            })
            .fold(0.0, f64::max);
        assert!(worst <= r.history.last().unwrap().max_delta + 1e-12 * scale);
        // the first, non-trivial iterate is checked without a floor
        assert!(r.history[0].max_delta > 1e-3);
    }

    #[test]
    fn csv_export() {
        let (tb, rb) = thermal_setup(1);
        let sys = &tb.system;
        let off = riesz_offline(sys, &rb).unwrap();
        let model = CoercivityModel::new(sys, &[0.5]).unwrap();
        let rom = project(sys, &rb).unwrap();
        let recs = bound_sweep(&off, &model, sys, &rom, &[vec![0.2], vec![0.6]]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.csv");
        write_bound_csv(&p, &recs).unwrap();
        let (h, rows) = parse_csv(&std::fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(h, ["mu", "delta_en", "true_error", "effectivity", "delta_s"]);
        assert_eq!(rows[1][0], 0.6);
        assert_eq!(rows[0][1], recs[0].delta_en);
    }
}
