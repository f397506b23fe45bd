use rayon::prelude::*;

use super::{check_points, Morph, MorphError, Result};
use crate::numkit::{DenseMatrix, LuFactor};

/// `b_{k,n}(t) = C(n,k) tᵏ (1−t)ⁿ⁻ᵏ`.
pub fn bernstein(n: usize, k: usize, t: f64) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c * t.powi(k as i32) * (1.0 - t).powi((n - k) as i32)
}

/// Free-form deformation lattice.
///
/// The affine map `ψ(x) = E⁻ᵀ(x − origin)` sends the box spanned by the rows
/// of `axes` (the edge vectors `E`) to the unit cube. Control points sit at
/// `(l/L, m/M, …)` in those unit coordinates and are displaced there; a
/// displacement `δ` of a corner moves the corner by `Eᵀδ` physically.
#[derive(Clone, Debug)]
pub struct FfdLattice {
    origin: Vec<f64>,
    axes: DenseMatrix,
    to_unit: LuFactor,
    degrees: Vec<usize>,
    displacements: Vec<Vec<f64>>,
}

/// Bernstein weights of each point, `None` for points outside the lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct FfdWeights {
    pub weights: Vec<Option<Vec<f64>>>,
}

impl FfdLattice {
    /// Lattice with zero displacements. `axes` holds the `d` edge vectors
    /// as rows.
    pub fn new(origin: Vec<f64>, axes: DenseMatrix, degrees: Vec<usize>) -> Result<Self> {
        let d = origin.len();
        if !(d == 2 || d == 3) {
            return Err(MorphError::Invalid(format!("FFD needs d = 2 or 3, got {d}")));
        }
        if axes.rows() != d || axes.cols() != d {
            return Err(MorphError::Dimension {
                context: "lattice axes",
                expected: d,
                got: axes.rows(),
            });
        }
        if degrees.len() != d {
            return Err(MorphError::Dimension {
                context: "lattice degrees",
                expected: d,
                got: degrees.len(),
            });
        }
        if degrees.contains(&0) {
            return Err(MorphError::Invalid("lattice degrees must be at least 1".into()));
        }
        let det = determinant(&axes);
        let scale: f64 = (0..d).map(|i| crate::numkit::norm2(axes.row(i))).product();
        if !(det.abs() > 1e-12 * scale) {
            return Err(MorphError::SingularAxes(det));
        }
        let to_unit = LuFactor::new(&axes.transpose()).map_err(|_| MorphError::SingularAxes(det))?;
        let count = degrees.iter().map(|n| n + 1).product();
        Ok(Self {
            origin,
            axes,
            to_unit,
            degrees,
            displacements: vec![vec![0.0; d]; count],
        })
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn control_count(&self) -> usize {
        self.displacements.len()
    }

    /// Flat index of the control point with lattice indices `idx`, first
    /// direction fastest.
    pub fn index(&self, idx: &[usize]) -> usize {
        let mut k = 0;
        for a in (0..self.degrees.len()).rev() {
            k = k * (self.degrees[a] + 1) + idx[a];
        }
        k
    }

    /// Lattice indices of flat index `k`.
    pub fn multi_index(&self, mut k: usize) -> Vec<usize> {
        self.degrees
            .iter()
            .map(|n| {
                let i = k % (n + 1);
                k /= n + 1;
                i
            })
            .collect()
    }

    /// Undisplaced control point `P` in unit coordinates.
    pub fn control_point(&self, k: usize) -> Vec<f64> {
        self.multi_index(k)
            .iter()
            .zip(&self.degrees)
            .map(|(&i, &n)| i as f64 / n as f64)
            .collect()
    }

    pub fn displacements(&self) -> &[Vec<f64>] {
        &self.displacements
    }

    /// Replaces all displacements (unit-cube coordinates, flat order).
    pub fn set_displacements(&mut self, displacements: Vec<Vec<f64>>) -> Result<()> {
        if displacements.len() != self.control_count() {
            return Err(MorphError::Dimension {
                context: "control point displacements",
                expected: self.control_count(),
                got: displacements.len(),
            });
        }
        check_points(&displacements, self.dim())?;
        self.displacements = displacements;
        Ok(())
    }

    pub fn set_displacement(&mut self, idx: &[usize], delta: Vec<f64>) -> Result<()> {
        check_points(std::slice::from_ref(&delta), self.dim())?;
        let k = self.index(idx);
        self.displacements[k] = delta;
        Ok(())
    }

    /// `ψ(x)`.
    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        let r: Vec<f64> = x.iter().zip(&self.origin).map(|(a, o)| a - o).collect();
        self.to_unit.solve(&r).expect("dimension checked")
    }

    /// `ψ⁻¹(t)`.
    pub fn from_unit(&self, t: &[f64]) -> Vec<f64> {
        let mut x = self.origin.clone();
        for (k, tk) in t.iter().enumerate() {
            for (xi, a) in x.iter_mut().zip(self.axes.row(k)) {
                *xi += tk * a;
            }
        }
        x
    }

    /// Tensor Bernstein weights at unit coordinates `t`, flat order.
    fn point_weights(&self, t: &[f64]) -> Vec<f64> {
        let per_dir: Vec<Vec<f64>> = self
            .degrees
            .iter()
            .zip(t)
            .map(|(&n, &ti)| (0..=n).map(|k| bernstein(n, k, ti)).collect())
            .collect();
        (0..self.control_count())
            .map(|k| {
                self.multi_index(k)
                    .iter()
                    .zip(&per_dir)
                    .map(|(&i, b)| b[i])
                    .product()
            })
            .collect()
    }

    /// The x-dependent part, reusable for any displacements.
    pub fn weights(&self, points: &[Vec<f64>]) -> Result<FfdWeights> {
        check_points(points, self.dim())?;
        let weights = points
            .par_iter()
            .map(|x| {
                let t = self.to_unit(x);
                let inside = t.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v));
                inside.then(|| self.point_weights(&t))
            })
            .collect();
        Ok(FfdWeights { weights })
    }

    /// `ψ⁻¹(Σ b_k(ψ(x)) (P_k + μ_k))`; points outside the lattice are left
    /// where they are.
    pub fn deform_with(&self, weights: &FfdWeights, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        if weights.weights.len() != points.len() {
            return Err(MorphError::Dimension {
                context: "cached FFD weights",
                expected: points.len(),
                got: weights.weights.len(),
            });
        }
        let d = self.dim();
        let moved: Vec<Vec<f64>> = (0..self.control_count())
            .map(|k| {
                self.control_point(k)
                    .iter()
                    .zip(&self.displacements[k])
                    .map(|(p, m)| p + m)
                    .collect()
            })
            .collect();
        Ok(points
            .par_iter()
            .zip(&weights.weights)
            .map(|(x, w)| match w {
                None => x.clone(),
                Some(w) => {
                    let mut t = vec![0.0; d];
                    for (wk, p) in w.iter().zip(&moved) {
                        for a in 0..d {
                            t[a] += wk * p[a];
                        }
                    }
                    self.from_unit(&t)
                }
            })
            .collect())
    }
}

impl Morph for FfdLattice {
    fn dim(&self) -> usize {
        self.origin.len()
    }

    fn deform_point(&self, x: &[f64]) -> Vec<f64> {
        let p = [x.to_vec()];
        let w = self.weights(&p).expect("dimension checked by caller");
        self.deform_with(&w, &p).expect("one weight per point").pop().unwrap()
    }

    fn deform(&self, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let w = self.weights(points)?;
        self.deform_with(&w, points)
    }
}

fn determinant(a: &DenseMatrix) -> f64 {
    match a.rows() {
        2 => a.get(0, 0) * a.get(1, 1) - a.get(0, 1) * a.get(1, 0),
        3 => {
            let m = |i, j| a.get(i, j);
            m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
        }
        _ => unreachable!("d checked"),
    }
}
