use anyhow::Result;
use serde_json::json;

use mor_core::interp::mdeim_demo::{self, MdeimDemoConfig};
use mor_core::io::write_csv;

use crate::config::{CommonArgs, Defaults, RunConfig};

pub const OPERATOR_TERMS: [usize; 5] = [2, 4, 6, 8, 10];
pub const TEST_POINTS: usize = 10;

pub fn defaults() -> Defaults {
    let d = MdeimDemoConfig::default();
    Defaults {
        grid: d.grid,
        train_size: d.n_train,
        // unused: the operator bases stop on a count
        tol: 1e-12,
        n_max: d.q_max,
    }
}

pub fn run(args: &CommonArgs) -> Result<serde_json::Value> {
    let cfg = RunConfig::resolve("deim-demo", args, defaults())?;
    let base = MdeimDemoConfig::default();
    let demo = mdeim_demo::build(&MdeimDemoConfig {
        grid: cfg.grid,
        n_train: cfg.train_size,
        q_max: cfg.n_max,
        seed: cfg.seed,
        ..base
    })?;
    let n_rb = base.n_rb.min(demo.basis.n());
    let qs: Vec<usize> = OPERATOR_TERMS.into_iter().filter(|&q| q <= cfg.n_max).collect();
    let test = super::test_parameters(&demo.fom.domain, TEST_POINTS, cfg.seed);
    let rows = mdeim_demo::error_sweep(&demo, n_rb, &qs, &test)?;
    let table: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| vec![r.q as f64, r.mean_rel_error, r.max_rel_error])
        .collect();
    write_csv(&cfg.path("mdeim_error.csv"), &["Q", "mean_rel_error", "max_rel_error"], &table)?;
    Ok(json!({
        "command": "deim-demo",
        "n_rb": n_rb,
        "q_a": demo.mdeim_a.deim.q(),
        "q_c": demo.mdeim_c.deim.q(),
        "errors": rows.iter().map(|r| r.mean_rel_error).collect::<Vec<_>>(),
        "out": cfg.out,
    }))
}
