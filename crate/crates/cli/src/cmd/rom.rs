use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Subcommand};
use serde_json::json;

use mor_core::rb::{load_rom, rom_solve, save_rom};

use crate::config::{CommonArgs, RunConfig};

#[derive(Subcommand, Clone, Debug)]
pub enum RomCommand {
    /// Build the thermal-block ROM by greedy and save it.
    Save(CommonArgs),
    /// Print a summary of a saved ROM.
    Load(RomDir),
    /// Solve a saved ROM at one parameter value.
    Solve(RomSolveArgs),
}

#[derive(Args, Clone, Debug)]
pub struct RomDir {
    /// Directory written by `rom save` or `thermal-block`.
    #[arg(long)]
    pub dir: PathBuf,
}

#[derive(Args, Clone, Debug)]
pub struct RomSolveArgs {
    #[arg(long)]
    pub dir: PathBuf,
    /// Parameter components, comma-separated.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub mu: Vec<f64>,
}

pub fn run(cmd: &RomCommand) -> Result<serde_json::Value> {
    match cmd {
        RomCommand::Save(args) => {
            let cfg = RunConfig::resolve("rom", args, super::thermal::defaults())?;
            let (_, _, result, _) = super::thermal::build(&cfg)?;
            save_rom(&result.rom, &cfg.out)?;
            Ok(json!({"command": "rom save", "n": result.rom.n(), "dir": cfg.out}))
        }
        RomCommand::Load(d) => {
            let rom = load_rom(&d.dir).with_context(|| format!("loading ROM from {}", d.dir.display()))?;
            Ok(json!({
                "command": "rom load",
                "n": rom.n(),
                "n_dofs": rom.basis().n_dofs(),
                "q_a": rom.q_a(),
                "q_f": rom.q_f(),
                "lower": rom.domain().lower(),
                "upper": rom.domain().upper(),
            }))
        }
        RomCommand::Solve(s) => {
            let rom = load_rom(&s.dir).with_context(|| format!("loading ROM from {}", s.dir.display()))?;
            let sol = rom_solve(&rom, &s.mu)?;
            Ok(json!({
                "command": "rom solve",
                "mu": s.mu,
                "coefficients": sol.coefficients,
                "output": sol.output,
            }))
        }
    }
}
