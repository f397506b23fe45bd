use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde_json::json;

use mor_core::morph::{format_points, parse_descriptor, parse_points};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MorphKind {
    Ffd,
    Rbf,
    Idw,
}

impl MorphKind {
    fn name(self) -> &'static str {
        match self {
            MorphKind::Ffd => "ffd",
            MorphKind::Rbf => "rbf",
            MorphKind::Idw => "idw",
        }
    }
}

#[derive(Args, Clone, Debug)]
pub struct MorphArgs {
    #[arg(value_enum)]
    pub kind: MorphKind,
    /// Whitespace-separated coordinates, one point per line.
    #[arg(long)]
    pub points: PathBuf,
    /// JSON description of the map.
    #[arg(long)]
    pub descriptor: PathBuf,
    /// Output directory; the deformed points go to `deformed_points.txt`.
    #[arg(long, default_value = "out/morph")]
    pub out: PathBuf,
}

pub fn run(args: &MorphArgs) -> Result<serde_json::Value> {
    let desc_text = std::fs::read_to_string(&args.descriptor)
        .with_context(|| format!("reading descriptor {}", args.descriptor.display()))?;
    let descriptor = parse_descriptor(args.kind.name(), &desc_text)
        .with_context(|| format!("in descriptor {}", args.descriptor.display()))?;
    let point_text =
        std::fs::read_to_string(&args.points).with_context(|| format!("reading points {}", args.points.display()))?;
    let points = parse_points(&point_text).with_context(|| format!("in point file {}", args.points.display()))?;

    let map = descriptor.build()?;
    let deformed = map.deform(&points)?;
    let max_displacement = points
        .iter()
        .zip(&deformed)
        .map(|(x, y)| x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .fold(0.0, f64::max);

    std::fs::create_dir_all(&args.out)?;
    let path = args.out.join("deformed_points.txt");
    std::fs::write(&path, format_points(&deformed))?;
    Ok(json!({
        "command": "morph",
        "kind": args.kind.name(),
        "points": points.len(),
        "max_displacement": max_displacement,
        "output": path,
    }))
}
