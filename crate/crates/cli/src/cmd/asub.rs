use anyhow::{ensure, Result};
use serde_json::json;

use mor_core::asub::{
    binned_spread, estimate_subspace, quadratic_fit_r2, sample_gradients, summary_data, write_eigenvalues,
    write_summary, ActiveSubspace, Gradient, QuadraticForm, Split,
};
use mor_core::fom::ParamDomain;

use crate::config::{CommonArgs, Defaults, RunConfig};

pub const QUADRATIC_DIAGONAL: [f64; 3] = [10.0, 1.0, 0.1];
pub const SUMMARY_BINS: usize = 20;

pub fn defaults() -> Defaults {
    Defaults {
        grid: 0,
        train_size: 2000,
        tol: 1.0,
        n_max: 1,
    }
}

/// Samples one example on `[-1, 1]^p` and writes its eigenvalue and
/// one-dimensional summary tables.
fn example(cfg: &RunConfig, name: &str, q: &QuadraticForm) -> Result<(ActiveSubspace, f64, f64)> {
    let p = q.dim();
    let domain = ParamDomain::new(vec![-1.0; p], vec![1.0; p])?;
    let grad = |m: &[f64]| q.gradient(m);
    let samples = sample_gradients(&|m| q.value(m), Gradient::Analytic(&grad), &domain, cfg.train_size, cfg.seed)?;
    let sub = estimate_subspace(&samples, Split::Fixed(1))?;
    write_eigenvalues(&cfg.path(&format!("{name}_eigenvalues.csv")), &sub)?;
    let rows = summary_data(&sub, &samples.unit_values())?;
    write_summary(&cfg.path(&format!("{name}_summary.csv")), &rows)?;
    let x: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let y: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let r2 = if x.len() >= 3 { quadratic_fit_r2(&x, &y)? } else { f64::NAN };
    Ok((sub, binned_spread(&x, &y, SUMMARY_BINS)?, r2))
}

pub fn run(args: &CommonArgs) -> Result<serde_json::Value> {
    let cfg = RunConfig::resolve("asub-demo", args, defaults())?;
    let (para, para_spread, _) = example(&cfg, "paraboloid", &QuadraticForm::paraboloid(3))?;
    let (quad, _, quad_r2) = example(&cfg, "quadratic", &QuadraticForm::diagonal(&QUADRATIC_DIAGONAL))?;
    let lam = &para.eigenvalues;
    ensure!(lam[lam.len() - 1] >= -1e-12 * lam[0], "covariance estimate is not positive semidefinite");
    Ok(json!({
        "command": "asub-demo",
        "samples": cfg.train_size,
        "paraboloid": {
            "eigenvalues": para.eigenvalues,
            "gap_ratios": para.gap_ratios(),
            "summary_spread": para_spread,
        },
        "quadratic": {
            "eigenvalues": quad.eigenvalues,
            "gap_ratios": quad.gap_ratios(),
            "leading_eigenvector": quad.w1.column(0),
            "summary_quadratic_r2": quad_r2,
        },
        "out": cfg.out,
    }))
}
