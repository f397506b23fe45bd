use rayon::prelude::*;

use super::{bounding_box_diagonal, check_distinct, check_points, distance, Morph, MorphError, Result};
use crate::numkit::{svd, DenseMatrix, LuFactor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    /// `exp(−r²/R)`.
    Gaussian,
    /// `(r/R)² ln(r/R)`, zero at `r = 0`.
    ThinPlate,
    /// `(1 − r/R)⁴₊ (4r/R + 1)`.
    WendlandC2,
    /// `√(r² + R²)`.
    Multiquadric,
    /// `1/√(r² + R²)`.
    InverseMultiquadric,
}

impl Kernel {
    pub const ALL: [Kernel; 5] = [
        Kernel::Gaussian,
        Kernel::ThinPlate,
        Kernel::WendlandC2,
        Kernel::Multiquadric,
        Kernel::InverseMultiquadric,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Gaussian => "gaussian",
            Kernel::ThinPlate => "thin-plate",
            Kernel::WendlandC2 => "wendland-c2",
            Kernel::Multiquadric => "multiquadric",
            Kernel::InverseMultiquadric => "inverse-multiquadric",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn eval(self, r: f64, radius: f64) -> f64 {
        match self {
            Kernel::Gaussian => (-r * r / radius).exp(),
            Kernel::ThinPlate => {
                if r == 0.0 {
                    0.0
                } else {
                    let s = r / radius;
                    s * s * s.ln()
                }
            }
            Kernel::WendlandC2 => {
                let s = r / radius;
                (1.0 - s).max(0.0).powi(4) * (4.0 * s + 1.0)
            }
            Kernel::Multiquadric => (r * r + radius * radius).sqrt(),
            Kernel::InverseMultiquadric => 1.0 / (r * r + radius * radius).sqrt(),
        }
    }
}

/// `𝓜(x) = c + Qx + Σ γ_i φ(‖x − x_Ci‖)` with `Σγ_i = 0` and
/// `Σγ_i x_Ci = 0`.
#[derive(Clone, Debug)]
pub struct RbfMorph {
    pub kernel: Kernel,
    pub radius: f64,
    pub control_points: Vec<Vec<f64>>,
    pub deformed_points: Vec<Vec<f64>>,
    /// `γ`, one row per control point, one column per component.
    pub gamma: DenseMatrix,
    pub c: Vec<f64>,
    /// Row `j` holds the linear coefficients of component `j`.
    pub q: DenseMatrix,
    factor: LuFactor,
}

impl RbfMorph {
    /// Builds with `R` = bounding-box diagonal of the control points when
    /// `radius` is `None`.
    pub fn build(
        control_points: Vec<Vec<f64>>,
        deformed_points: Vec<Vec<f64>>,
        kernel: Kernel,
        radius: Option<f64>,
    ) -> Result<Self> {
        let nc = control_points.len();
        let d = control_points.first().map_or(0, Vec::len);
        if d == 0 {
            return Err(MorphError::Invalid("no control points".into()));
        }
        check_points(&control_points, d)?;
        if deformed_points.len() != nc {
            return Err(MorphError::Dimension {
                context: "deformed control points",
                expected: nc,
                got: deformed_points.len(),
            });
        }
        check_points(&deformed_points, d)?;
        if nc < d + 1 {
            return Err(MorphError::TooFewControls { got: nc, dim: d });
        }
        let diag = bounding_box_diagonal(&control_points);
        let radius = radius.unwrap_or(diag);
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(MorphError::Invalid(format!("radius must be positive, got {radius}")));
        }
        check_distinct(&control_points, 1e-14 * diag)?;
        let p = DenseMatrix::from_fn(nc, d + 1, |i, j| if j == 0 { 1.0 } else { control_points[i][j - 1] });
        if svd(&p).map_or(0, |s| s.rank(1e-12)) < d + 1 {
            return Err(MorphError::AffinelyDegenerate);
        }
        let m = nc + 1 + d;
        let mut a = DenseMatrix::zeros(m, m);
        for i in 0..nc {
            for j in 0..nc {
                a.set(i, j, kernel.eval(distance(&control_points[i], &control_points[j]), radius));
            }
            for k in 0..=d {
                a.set(i, nc + k, p.get(i, k));
                a.set(nc + k, i, p.get(i, k));
            }
        }
        let factor = LuFactor::new(&a).map_err(|source| MorphError::SingularKernel {
            kernel: kernel.name(),
            radius,
            source,
        })?;
        let mut morph = Self {
            kernel,
            radius,
            control_points,
            deformed_points: Vec::new(),
            gamma: DenseMatrix::zeros(nc, d),
            c: vec![0.0; d],
            q: DenseMatrix::zeros(d, d),
            factor,
        };
        morph.set_deformed(deformed_points)?;
        Ok(morph)
    }

    /// Re-solves for new deformed control points with the stored
    /// factorization.
    pub fn set_deformed(&mut self, deformed_points: Vec<Vec<f64>>) -> Result<()> {
        let nc = self.control_points.len();
        let d = self.dim();
        if deformed_points.len() != nc {
            return Err(MorphError::Dimension {
                context: "deformed control points",
                expected: nc,
                got: deformed_points.len(),
            });
        }
        check_points(&deformed_points, d)?;
        for j in 0..d {
            let mut rhs = vec![0.0; nc + 1 + d];
            for i in 0..nc {
                rhs[i] = deformed_points[i][j];
            }
            let sol = self.factor.solve(&rhs).expect("dimension fixed at build");
            for i in 0..nc {
                self.gamma.set(i, j, sol[i]);
            }
            self.c[j] = sol[nc];
            for k in 0..d {
                self.q.set(j, k, sol[nc + 1 + k]);
            }
        }
        self.deformed_points = deformed_points;
        Ok(())
    }

    /// `φ(‖x − x_Ci‖)` for every point (rows) and control point (columns).
    pub fn kernel_columns(&self, points: &[Vec<f64>]) -> Result<DenseMatrix> {
        check_points(points, self.dim())?;
        let nc = self.control_points.len();
        let rows: Vec<Vec<f64>> = points
            .par_iter()
            .map(|x| {
                self.control_points
                    .iter()
                    .map(|xc| self.kernel.eval(distance(x, xc), self.radius))
                    .collect()
            })
            .collect();
        if rows.is_empty() {
            return Ok(DenseMatrix::zeros(0, nc));
        }
        Ok(DenseMatrix::from_rows(&rows).expect("uniform rows"))
    }

    pub fn deform_with(&self, kernels: &DenseMatrix, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        if kernels.rows() != points.len() || kernels.cols() != self.control_points.len() {
            return Err(MorphError::Dimension {
                context: "cached kernel columns",
                expected: points.len(),
                got: kernels.rows(),
            });
        }
        check_points(points, self.dim())?;
        Ok(points
            .par_iter()
            .enumerate()
            .map(|(p, x)| self.combine(kernels.row(p), x))
            .collect())
    }

    fn combine(&self, phi: &[f64], x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|j| {
                let mut v = self.c[j];
                for k in 0..d {
                    v += self.q.get(j, k) * x[k];
                }
                for (i, f) in phi.iter().enumerate() {
                    v += self.gamma.get(i, j) * f;
                }
                v
            })
            .collect()
    }
}

impl Morph for RbfMorph {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn deform_point(&self, x: &[f64]) -> Vec<f64> {
        let phi: Vec<f64> = self
            .control_points
            .iter()
            .map(|xc| self.kernel.eval(distance(x, xc), self.radius))
            .collect();
        self.combine(&phi, x)
    }
}
