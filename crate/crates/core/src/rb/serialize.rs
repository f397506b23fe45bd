//! On-disk ROM format: `manifest.json` plus one CSV per payload.
//!
//! * `a_{i}.csv`: the `N × N` reduced matrix of term `i`, one row per line
//! * `f.csv`, `l.csv`: one reduced vector per line
//! * `basis.csv`: `N_h` lines of `N` values

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{RbError, ReducedBasis, Result, RomSystem};
use crate::fom::{ParamDomain, ThetaDescriptor, ThetaMap};
use crate::io::{csv_string, parse_csv};
use crate::numkit::DenseMatrix;

pub const ROM_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RomManifest {
    pub format_version: u32,
    pub n: usize,
    pub n_dofs: usize,
    pub q_a: usize,
    pub q_f: usize,
    pub q_l: usize,
    pub theta_a: ThetaDescriptor,
    pub theta_f: ThetaDescriptor,
    pub theta_l: ThetaDescriptor,
    pub domain: ParamDomain,
    pub selected_parameters: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
}

fn descriptor(theta: &ThetaMap) -> Result<ThetaDescriptor> {
    theta
        .descriptor()
        .ok_or_else(|| RbError::UnserializableTheta(format!("{theta:?}")))
}

fn header(n: usize) -> Vec<String> {
    (0..n).map(|k| format!("c{k}")).collect()
}

fn write_rows(path: &Path, n: usize, rows: &[Vec<f64>]) -> Result<()> {
    let h = header(n);
    let h: Vec<&str> = h.iter().map(String::as_str).collect();
    fs::write(path, csv_string(&h, rows))?;
    Ok(())
}

pub fn save_rom(rom: &RomSystem, dir: &Path) -> Result<()> {
    let basis = rom.basis();
    let manifest = RomManifest {
        format_version: ROM_FORMAT_VERSION,
        n: rom.n(),
        n_dofs: basis.n_dofs(),
        q_a: rom.q_a(),
        q_f: rom.q_f(),
        q_l: rom.output_terms.len(),
        theta_a: descriptor(&rom.theta_a)?,
        theta_f: descriptor(&rom.theta_f)?,
        theta_l: descriptor(&rom.theta_l)?,
        domain: rom.domain.clone(),
        selected_parameters: basis.selected_parameters.clone(),
        singular_values: basis.singular_values.clone(),
    };
    fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| RbError::Format {
        path: dir.join("manifest.json").display().to_string(),
        message: e.to_string(),
    })?;
    fs::write(dir.join("manifest.json"), json)?;
    let n = rom.n();
    for (i, a) in rom.matrix_terms.iter().enumerate() {
        let rows: Vec<Vec<f64>> = (0..n).map(|r| a.row(r).to_vec()).collect();
        write_rows(&dir.join(format!("a_{i}.csv")), n, &rows)?;
    }
    write_rows(&dir.join("f.csv"), n, &rom.rhs_terms)?;
    write_rows(&dir.join("l.csv"), n, &rom.output_terms)?;
    let rows: Vec<Vec<f64>> = (0..basis.n_dofs()).map(|r| basis.basis.row(r).to_vec()).collect();
    write_rows(&dir.join("basis.csv"), n, &rows)?;
    Ok(())
}

fn format_err(path: &Path, message: impl Into<String>) -> RbError {
    RbError::Format {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn read_rows(path: &Path, n: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    let (h, rows) = parse_csv(&text).map_err(|m| format_err(path, m))?;
    // an N = 0 payload still has a (blank) header line
    if n > 0 && h.len() != n {
        return Err(format_err(path, format!("expected {n} columns, found {}", h.len())));
    }
    if rows.len() != count {
        return Err(format_err(path, format!("expected {count} rows, found {}", rows.len())));
    }
    Ok(rows)
}

pub fn load_rom(dir: &Path) -> Result<RomSystem> {
    let mpath = dir.join("manifest.json");
    let text = fs::read_to_string(&mpath)?;
    let m: RomManifest = serde_json::from_str(&text).map_err(|e| format_err(&mpath, e.to_string()))?;
    if m.format_version != ROM_FORMAT_VERSION {
        return Err(format_err(&mpath, format!("unsupported format version {}", m.format_version)));
    }
    let theta_a = ThetaMap::from_descriptor(&m.theta_a);
    let theta_f = ThetaMap::from_descriptor(&m.theta_f);
    let theta_l = ThetaMap::from_descriptor(&m.theta_l);
    for (theta, q, what) in [(&theta_a, m.q_a, "theta_a"), (&theta_f, m.q_f, "theta_f"), (&theta_l, m.q_l, "theta_l")] {
        if theta.len() != q {
            return Err(format_err(&mpath, format!("{what} has {} terms, manifest says {q}", theta.len())));
        }
    }
    let n = m.n;
    let mut matrix_terms = Vec::with_capacity(m.q_a);
    for i in 0..m.q_a {
        let rows = read_rows(&dir.join(format!("a_{i}.csv")), n, n)?;
        matrix_terms.push(DenseMatrix::from_rows(&rows)?);
    }
    if n == 0 {
        matrix_terms.iter_mut().for_each(|a| *a = DenseMatrix::zeros(0, 0));
    }
    let rhs_terms = read_rows(&dir.join("f.csv"), n, m.q_f)?;
    let output_terms = read_rows(&dir.join("l.csv"), n, m.q_l)?;
    let rows = read_rows(&dir.join("basis.csv"), n, m.n_dofs)?;
    let basis = if n == 0 {
        DenseMatrix::zeros(m.n_dofs, 0)
    } else {
        DenseMatrix::from_rows(&rows)?
    };
    Ok(RomSystem {
        matrix_terms,
        rhs_terms,
        output_terms,
        theta_a,
        theta_f,
        theta_l,
        domain: m.domain,
        basis: Arc::new(ReducedBasis {
            basis,
            singular_values: m.singular_values,
            selected_parameters: m.selected_parameters,
        }),
    })
}
