//! Basis export: `basis.csv` (one row per point, one column per mode) and a
//! `manifest.json` with 0-based magic indices and the error history.

use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{DeimBasis, EimBasis, PNorm, Result};
use crate::io::csv_string;
use crate::numkit::DenseMatrix;

#[derive(Serialize)]
struct Manifest<'a> {
    kind: &'static str,
    q: usize,
    rows: usize,
    magic_indices: &'a [usize],
    error_history: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    selected_parameter_indices: Option<&'a [usize]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_norm: Option<PNorm>,
}

fn write_basis(dir: &Path, h: &DenseMatrix) -> Result<()> {
    let header: Vec<String> = (0..h.cols()).map(|q| format!("h{q}")).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<f64>> = (0..h.rows()).map(|i| h.row(i).to_vec()).collect();
    fs::write(dir.join("basis.csv"), csv_string(&header, &rows))?;
    Ok(())
}

pub fn write_eim(dir: &Path, basis: &EimBasis) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_basis(dir, &basis.basis)?;
    let m = Manifest {
        kind: "eim",
        q: basis.q(),
        rows: basis.basis.rows(),
        magic_indices: &basis.magic_indices,
        error_history: &basis.error_history,
        selected_parameter_indices: Some(&basis.selected_parameter_indices),
        p_norm: Some(basis.p_norm),
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&m)?)?;
    Ok(())
}

pub fn write_deim(dir: &Path, basis: &DeimBasis) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_basis(dir, &basis.basis)?;
    let m = Manifest {
        kind: "deim",
        q: basis.q(),
        rows: basis.basis.rows(),
        magic_indices: &basis.magic_indices,
        error_history: &basis.error_history,
        selected_parameter_indices: None,
        p_norm: None,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&m)?)?;
    Ok(())
}
