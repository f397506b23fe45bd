use anyhow::{ensure, Result};
use serde_json::json;

use mor_core::interp::gaussian_demo::{self, GaussianDemoConfig};
use mor_core::interp::{lebesgue_constants, write_eim, EimOptions};
use mor_core::io::write_csv;

use crate::config::{CommonArgs, Defaults, RunConfig};

/// Number of source terms kept while the basis size varies.
pub const Q_EIM: usize = 11;
pub const RB_SIZES: std::ops::RangeInclusive<usize> = 1..=15;
pub const TEST_POINTS: usize = 20;

pub fn defaults() -> Defaults {
    let d = GaussianDemoConfig::default();
    Defaults {
        grid: d.grid,
        train_size: d.n_train,
        tol: d.eim.tol,
        n_max: d.eim.n_max,
    }
}

pub fn run(args: &CommonArgs) -> Result<serde_json::Value> {
    let cfg = RunConfig::resolve("eim-demo", args, defaults())?;
    let demo = gaussian_demo::build(&GaussianDemoConfig {
        grid: cfg.grid,
        n_train: cfg.train_size,
        eim: EimOptions {
            tol: cfg.tol,
            n_max: cfg.n_max,
            ..GaussianDemoConfig::default().eim
        },
        seed: cfg.seed,
        ..GaussianDemoConfig::default()
    })?;
    let eim = &demo.eim;
    let eps = &eim.error_history;
    ensure!(eps.windows(2).all(|w| w[1] <= w[0]), "EIM error history increased");

    let lebesgue = lebesgue_constants(eim);
    let rows: Vec<Vec<f64>> = (0..eim.q())
        .map(|k| vec![(k + 1) as f64, eps[k], lebesgue[k]])
        .collect();
    write_csv(&cfg.path("eim_error.csv"), &["Q", "epsilon", "lebesgue"], &rows)?;

    let magic = demo.magic_points();
    let rows: Vec<Vec<f64>> = magic
        .iter()
        .zip(&eim.magic_indices)
        .map(|(x, &i)| vec![i as f64, x[0], x[1]])
        .collect();
    write_csv(&cfg.path("magic_points.csv"), &["node", "x", "y"], &rows)?;
    write_eim(&cfg.path("eim"), eim)?;

    let q_eim = Q_EIM.min(eim.q());
    let test = super::test_parameters(demo.fom.system.domain(), TEST_POINTS, cfg.seed);
    let sizes: Vec<usize> = RB_SIZES.filter(|&n| n <= demo.training.len()).collect();
    let sweep = gaussian_demo::rom_error_sweep(&demo, q_eim, &sizes, &test)?;
    let rows: Vec<Vec<f64>> = sweep
        .iter()
        .map(|r| vec![r.n as f64, r.mean_rel_error, r.max_rel_error])
        .collect();
    write_csv(&cfg.path("rom_error.csv"), &["N", "mean_rel_error", "max_rel_error"], &rows)?;

    Ok(json!({
        "command": "eim-demo",
        "q": eim.q(),
        "final_epsilon": eps.last(),
        "q_eim": q_eim,
        "saturated": eim.saturated,
        "out": cfg.out,
    }))
}
