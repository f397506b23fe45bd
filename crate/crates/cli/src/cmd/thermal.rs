use anyhow::{ensure, Result};
use rayon::prelude::*;
use serde_json::json;

use mor_core::errest::{bound_sweep, riesz_offline, write_bound_csv, ResidualEstimator};
use mor_core::fom::{assemble_thermal_block, fom_solve, AffineSystem, ThermalBlock, THERMAL_REFERENCE_MU};
use mor_core::io::write_csv;
use mor_core::numkit::dot;
use mor_core::rb::{greedy, project, rom_solve, save_rom, GreedyOptions, GreedyResult};

use crate::config::{CommonArgs, Defaults, RunConfig};

pub const TEST_POINTS: usize = 20;

pub fn defaults() -> Defaults {
    Defaults {
        grid: 32,
        train_size: 50,
        tol: 1e-6,
        n_max: 15,
    }
}

/// Greedy build with the residual-based bound, shared with `rom save`.
pub fn build(cfg: &RunConfig) -> Result<(ThermalBlock, Vec<Vec<f64>>, GreedyResult, ResidualEstimator)> {
    let tb = assemble_thermal_block(cfg.grid, cfg.sigma1, cfg.sigma2)?;
    let training = ThermalBlock::training_domain().uniform_grid(cfg.train_size);
    let est = ResidualEstimator::new(&tb.system, &[THERMAL_REFERENCE_MU])?;
    let opts = GreedyOptions {
        tol: cfg.tol,
        n_max: cfg.n_max,
        mu1: None,
    };
    let result = greedy(&tb.system, &training, &opts, &est)?;
    Ok((tb, training, result, est))
}

fn energy_error(system: &AffineSystem, mu: &[f64], truth: &[f64], approx: &[f64]) -> Result<f64> {
    let e: Vec<f64> = truth.iter().zip(approx).map(|(a, b)| a - b).collect();
    Ok(dot(&e, &system.assemble_matrix(mu)?.matvec(&e)).max(0.0).sqrt())
}

pub fn run(args: &CommonArgs) -> Result<serde_json::Value> {
    let cfg = RunConfig::resolve("thermal-block", args, defaults())?;
    let (tb, training, result, est) = build(&cfg)?;
    let sys = &tb.system;

    let truths: Vec<Vec<f64>> = training
        .par_iter()
        .map(|mu| Ok(fom_solve(sys, mu)?.coefficients))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for step in &result.history {
        let rom = project(sys, &result.basis.truncated(step.n))?;
        let worst = training
            .par_iter()
            .zip(&truths)
            .map(|(mu, truth)| energy_error(sys, mu, truth, &rom.lift(&rom_solve(&rom, mu)?.coefficients)?))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        rows.push(vec![step.n as f64, step.max_delta, worst]);
    }
    write_csv(&cfg.path("greedy_history.csv"), &["N", "max_delta", "max_true_error"], &rows)?;

    // Bounds are swept with the first greedy basis: the thermal-block
    // solution manifold is two-dimensional, so larger bases are exact to
    // round-off and their effectivities would only measure noise.
    let first = result.basis.truncated(1);
    let rom1 = project(sys, &first)?;
    let offline = riesz_offline(sys, &first)?;
    let test = super::test_parameters(&ThermalBlock::training_domain(), TEST_POINTS, cfg.seed);
    let records = bound_sweep(&offline, &est.model, sys, &rom1, &test)?;
    write_bound_csv(&cfg.path("bound_sweep.csv"), &records)?;
    for r in &records {
        ensure!(r.effectivity >= 1.0 - 1e-10, "energy bound below the true error at mu = {:?}", r.mu);
        ensure!(r.delta_s >= r.output_error, "output bound below the output error at mu = {:?}", r.mu);
    }

    save_rom(&result.rom, &cfg.path("rom"))?;
    let last = result.history.last().expect("greedy records at least one step");
    Ok(json!({
        "command": "thermal-block",
        "n": result.basis.n(),
        "converged": result.converged,
        "saturated": result.saturated,
        "final_max_delta": last.max_delta,
        "min_effectivity": records.iter().map(|r| r.effectivity).fold(f64::INFINITY, f64::min),
        "out": cfg.out,
    }))
}
