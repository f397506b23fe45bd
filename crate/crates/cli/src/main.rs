//! `mor`: runs the reduced-order modelling demos and writes their data as
//! CSV/JSON under an output directory.

mod cmd;
mod config;

use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::CommonArgs;
use mor_core::morph::MorphError;

#[derive(Parser, Debug)]
#[command(name = "mor", version, about = "Reduced-order modelling demos")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Greedy reduced basis and certified bounds for the two-material heat
    /// conduction problem.
    ThermalBlock(CommonArgs),
    /// Empirical interpolation of the Gaussian source and the resulting ROM.
    EimDemo(CommonArgs),
    /// Matrix DEIM on the nonlinear diffusion problem.
    DeimDemo(CommonArgs),
    /// Active subspaces of the paraboloid and quadratic examples.
    AsubDemo(CommonArgs),
    /// Deform a point cloud with FFD, RBF or IDW.
    Morph(cmd::morph::MorphArgs),
    /// Save, inspect or solve a serialized ROM.
    #[command(subcommand)]
    Rom(cmd::rom::RomCommand),
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("MOR_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| anyhow::anyhow!("MOR_THREADS must be a non-negative integer, got '{v}'"))?;
    // 0 lets rayon pick
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: &Cli) -> Result<serde_json::Value> {
    init_threads()?;
    match &cli.command {
        Command::ThermalBlock(a) => cmd::thermal::run(a),
        Command::EimDemo(a) => cmd::eim::run(a),
        Command::DeimDemo(a) => cmd::deim::run(a),
        Command::AsubDemo(a) => cmd::asub::run(a),
        Command::Morph(a) => cmd::morph::run(a),
        Command::Rom(c) => cmd::rom::run(c),
    }
}

/// Input files that fail to parse exit with 2, like bad flags.
fn is_parse_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        matches!(
            c.downcast_ref::<MorphError>(),
            Some(MorphError::Descriptor { .. } | MorphError::PointParse { .. })
        )
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("JSON values serialize"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_parse_error(&e) { 2 } else { 1 })
        }
    }
}
