//! JSON descriptors for the three morphing maps.
//!
//! ```json
//! {"origin": [0, 0], "axes": [1, 0, 0, 1], "degrees": [2, 2],
//!  "displacements": [[0, 0], ...]}
//! {"control_points": [[0, 0], ...], "deformed_points": [[0, 0.1], ...],
//!  "kernel": "thin-plate", "R": 1.5}
//! {"control_points": [[0, 0], ...], "deformed_points": [...], "s": 2}
//! ```

use serde::Deserialize;

use super::{FfdLattice, IdwMorph, Kernel, Morph, MorphError, RbfMorph, Result, DEFAULT_EXPONENT};
use crate::numkit::DenseMatrix;

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FfdDescriptor {
    pub origin: Vec<f64>,
    /// Edge vectors as rows, row-major.
    pub axes: Vec<f64>,
    pub degrees: Vec<usize>,
    /// Flat order, first direction fastest; zero when omitted.
    #[serde(default)]
    pub displacements: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RbfDescriptor {
    pub control_points: Vec<Vec<f64>>,
    pub deformed_points: Vec<Vec<f64>>,
    pub kernel: Kernel,
    #[serde(default, alias = "R")]
    pub radius: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IdwDescriptor {
    pub control_points: Vec<Vec<f64>>,
    pub deformed_points: Vec<Vec<f64>>,
    #[serde(default = "default_exponent")]
    pub s: u32,
}

fn default_exponent() -> u32 {
    DEFAULT_EXPONENT
}

#[derive(Clone, Debug, PartialEq)]
pub enum Descriptor {
    Ffd(FfdDescriptor),
    Rbf(RbfDescriptor),
    Idw(IdwDescriptor),
}

fn from_json<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| MorphError::Descriptor {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Parses a descriptor for the map named `kind` (`ffd`, `rbf` or `idw`).
pub fn parse_descriptor(kind: &str, text: &str) -> Result<Descriptor> {
    match kind {
        "ffd" => Ok(Descriptor::Ffd(from_json(text)?)),
        "rbf" => Ok(Descriptor::Rbf(from_json(text)?)),
        "idw" => Ok(Descriptor::Idw(from_json(text)?)),
        _ => Err(MorphError::Invalid(format!("unknown morph kind '{kind}'"))),
    }
}

impl Descriptor {
    pub fn build(self) -> Result<Box<dyn Morph>> {
        match self {
            Descriptor::Ffd(f) => {
                let d = f.origin.len();
                if f.axes.len() != d * d {
                    return Err(MorphError::Dimension {
                        context: "axes entries (d × d)",
                        expected: d * d,
                        got: f.axes.len(),
                    });
                }
                let axes = DenseMatrix::from_row_major(d, d, f.axes).expect("length checked");
                let mut lat = FfdLattice::new(f.origin, axes, f.degrees)?;
                if let Some(disp) = f.displacements {
                    lat.set_displacements(disp)?;
                }
                Ok(Box::new(lat))
            }
            Descriptor::Rbf(r) => Ok(Box::new(RbfMorph::build(
                r.control_points,
                r.deformed_points,
                r.kernel,
                r.radius,
            )?)),
            Descriptor::Idw(i) => Ok(Box::new(IdwMorph::new(i.control_points, i.deformed_points, i.s)?)),
        }
    }
}
