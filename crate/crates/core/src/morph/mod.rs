//! Shape morphing maps `x ↦ 𝓜(x; μ)`: free-form deformation, radial basis
//! function interpolation and inverse distance weighting.
//!
//! Each map splits into an `x`-dependent part that can be computed once for
//! a point set (`*_weights`, `kernel_columns`) and a cheap combination with
//! the μ-dependent control data.

mod descriptor;
mod ffd;
mod idw;
mod rbf;

use thiserror::Error;

use crate::io::fmt_f64;
use crate::numkit::NumError;

pub use descriptor::{parse_descriptor, Descriptor};
pub use ffd::{bernstein, FfdLattice, FfdWeights};
pub use idw::{IdwMorph, IdwWeights, DEFAULT_EXPONENT};
pub use rbf::{Kernel, RbfMorph};

#[derive(Debug, Error)]
pub enum MorphError {
    #[error("lattice axes are singular (determinant {0:e})")]
    SingularAxes(f64),
    #[error("{context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("control points {0} and {1} coincide")]
    DuplicateControl(usize, usize),
    #[error("{got} control points cannot fix a linear polynomial in {dim} dimensions (need {})", dim + 1)]
    TooFewControls { got: usize, dim: usize },
    #[error("control points are affinely degenerate (they lie in a lower-dimensional plane)")]
    AffinelyDegenerate,
    #[error("RBF system is singular for kernel {kernel} with radius {radius}")]
    SingularKernel {
        kernel: &'static str,
        radius: f64,
        #[source]
        source: NumError,
    },
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("point file line {line}: {message}")]
    PointParse { line: usize, message: String },
    #[error("descriptor line {line}, column {column}: {message}")]
    Descriptor {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MorphError>;

/// A deformation map on `d`-dimensional points.
pub trait Morph: Sync {
    fn dim(&self) -> usize;
    fn deform_point(&self, x: &[f64]) -> Vec<f64>;

    fn deform(&self, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        use rayon::prelude::*;
        check_points(points, self.dim())?;
        Ok(points.par_iter().map(|x| self.deform_point(x)).collect())
    }
}

pub(crate) fn check_points(points: &[Vec<f64>], d: usize) -> Result<()> {
    match points.iter().find(|p| p.len() != d) {
        Some(p) => Err(MorphError::Dimension {
            context: "point dimension",
            expected: d,
            got: p.len(),
        }),
        None => Ok(()),
    }
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Diagonal of the axis-aligned bounding box.
pub fn bounding_box_diagonal(points: &[Vec<f64>]) -> f64 {
    let Some(first) = points.first() else { return 0.0 };
    let d = first.len();
    (0..d)
        .map(|k| {
            let (lo, hi) = points
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[k]), hi.max(p[k])));
            (hi - lo) * (hi - lo)
        })
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn check_distinct(points: &[Vec<f64>], tol: f64) -> Result<()> {
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if distance(&points[i], &points[j]) <= tol {
                return Err(MorphError::DuplicateControl(i, j));
            }
        }
    }
    Ok(())
}

/// Whitespace-separated coordinates, one point per line. Blank lines and
/// lines starting with `#` are skipped; every point must have the same
/// number of columns.
pub fn parse_points(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut points: Vec<Vec<f64>> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let p = t
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>().map_err(|e| MorphError::PointParse {
                    line: k + 1,
                    message: format!("'{s}': {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(f) = points.first() {
            if f.len() != p.len() {
                return Err(MorphError::PointParse {
                    line: k + 1,
                    message: format!("expected {} columns, found {}", f.len(), p.len()),
                });
            }
        }
        if let Some(v) = p.iter().find(|v| !v.is_finite()) {
            return Err(MorphError::PointParse {
                line: k + 1,
                message: format!("non-finite coordinate {v}"),
            });
        }
        points.push(p);
    }
    Ok(points)
}

pub fn format_points(points: &[Vec<f64>]) -> String {
    let mut s = String::new();
    for p in points {
        let row: Vec<String> = p.iter().map(|v| fmt_f64(*v)).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_file_round_trip() {
        let pts = vec![vec![0.1, -2.5e-7], vec![1.0 / 3.0, 4.0]];
        assert_eq!(parse_points(&format_points(&pts)).unwrap(), pts);
        let parsed = parse_points("# header\n\n1 2\n  3\t4 \n").unwrap();
        assert_eq!(parsed, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    }

    #[test]
    fn point_file_errors_carry_line_numbers() {
        let e = parse_points("1 2\n3 x\n").unwrap_err();
        assert!(matches!(e, MorphError::PointParse { line: 2, .. }), "{e}");
        let e = parse_points("1 2\n\n3 4 5\n").unwrap_err();
        assert!(e.to_string().contains("line 3"));
    }

    #[test]
    fn bounding_box() {
        let p = vec![vec![0.0, 0.0], vec![3.0, 1.0], vec![1.0, 4.0]];
        assert_eq!(bounding_box_diagonal(&p), 5.0);
        assert_eq!(bounding_box_diagonal(&[]), 0.0);
    }
}
