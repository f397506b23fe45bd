use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use serde::Deserialize;

pub const DEFAULT_SEED: u64 = 42;

/// Flags shared by every demo. Anything left unset falls back to the JSON
/// config file, then to the demo's own default.
#[derive(Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// Elements per side of the full-order grid.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Number of training parameters (or Monte Carlo samples).
    #[arg(long)]
    pub train_size: Option<usize>,
    /// Stopping tolerance of the greedy or interpolation loop.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Largest basis size.
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with any of the keys above (snake_case); flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub grid: Option<usize>,
    pub train_size: Option<usize>,
    pub tol: Option<f64>,
    pub n_max: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub sigma1: Option<f64>,
    pub sigma2: Option<f64>,
}

/// Resolved settings for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub demo: &'static str,
    pub grid: usize,
    pub train_size: usize,
    pub tol: f64,
    pub n_max: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub sigma1: f64,
    pub sigma2: f64,
}

/// Per-demo fallbacks.
pub struct Defaults {
    pub grid: usize,
    pub train_size: usize,
    pub tol: f64,
    pub n_max: usize,
}

impl RunConfig {
    pub fn resolve(demo: &'static str, args: &CommonArgs, defaults: Defaults) -> Result<Self> {
        let file = match &args.config {
            Some(p) => read_config(p)?,
            None => FileConfig::default(),
        };
        let cfg = Self {
            demo,
            grid: args.grid.or(file.grid).unwrap_or(defaults.grid),
            train_size: args.train_size.or(file.train_size).unwrap_or(defaults.train_size),
            tol: args.tol.or(file.tol).unwrap_or(defaults.tol),
            n_max: args.n_max.or(file.n_max).unwrap_or(defaults.n_max),
            seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            out: args
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from(format!("out/{demo}"))),
            sigma1: file.sigma1.unwrap_or(1.0),
            sigma2: file.sigma2.unwrap_or(5.0),
        };
        anyhow::ensure!(cfg.train_size >= 1, "--train-size must be at least 1");
        anyhow::ensure!(cfg.n_max >= 1, "--n-max must be at least 1");
        anyhow::ensure!(cfg.tol > 0.0, "--tol must be positive, got {}", cfg.tol);
        std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating output directory {}", cfg.out.display()))?;
        Ok(cfg)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn read_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> Defaults {
        Defaults {
            grid: 8,
            train_size: 10,
            tol: 1e-6,
            n_max: 5,
        }
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("c.json");
        std::fs::write(&cfg_path, r#"{"grid": 12, "seed": 7, "tol": 1e-3, "sigma2": 2.0}"#).unwrap();
        let args = CommonArgs {
            grid: Some(20),
            out: Some(dir.path().join("o")),
            config: Some(cfg_path),
            ..Default::default()
        };
        let c = RunConfig::resolve("x", &args, defaults()).unwrap();
        assert_eq!((c.grid, c.seed, c.tol, c.train_size, c.sigma2), (20, 7, 1e-3, 10, 2.0));
        assert!(dir.path().join("o").is_dir());
    }

    #[test]
    fn seed_defaults_to_42_and_unknown_keys_fail() {
        let dir = tempfile::tempdir().unwrap();
        let args = CommonArgs {
            out: Some(dir.path().to_path_buf()),
            ..Default::default()
        };
        assert_eq!(RunConfig::resolve("x", &args, defaults()).unwrap().seed, 42);
        let bad = dir.path().join("bad.json");
        std::fs::write(&bad, r#"{"gird": 3}"#).unwrap();
        let args = CommonArgs {
            config: Some(bad),
            ..args
        };
        assert!(RunConfig::resolve("x", &args, defaults()).is_err());
    }
}
