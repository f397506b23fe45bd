use rayon::prelude::*;

use super::{bounding_box_diagonal, check_distinct, check_points, distance, Morph, MorphError, Result};

pub const DEFAULT_EXPONENT: u32 = 2;

/// Inverse distance weighting of the control displacements:
/// `𝓜(x) = x + Σ w_k(x) (y_Ck − x_Ck)`.
///
/// The Shepard weights form a partition of unity, so this agrees with
/// `Σ w_k(x) y_Ck` ([`IdwMorph::interpolate_positions`]) at the control
/// points but is the identity when nothing moves.
#[derive(Clone, Debug)]
pub struct IdwMorph {
    pub control_points: Vec<Vec<f64>>,
    pub deformed_points: Vec<Vec<f64>>,
    pub exponent: u32,
    /// Distances below this count as hitting a control point.
    hit_tol: f64,
}

/// Shepard weights, one row per evaluation point.
#[derive(Clone, Debug, PartialEq)]
pub struct IdwWeights {
    pub weights: Vec<Vec<f64>>,
}

impl IdwMorph {
    pub fn new(control_points: Vec<Vec<f64>>, deformed_points: Vec<Vec<f64>>, exponent: u32) -> Result<Self> {
        let d = control_points.first().map_or(0, Vec::len);
        if d == 0 {
            return Err(MorphError::Invalid("no control points".into()));
        }
        if exponent == 0 {
            return Err(MorphError::Invalid("IDW exponent must be a positive integer".into()));
        }
        check_points(&control_points, d)?;
        if deformed_points.len() != control_points.len() {
            return Err(MorphError::Dimension {
                context: "deformed control points",
                expected: control_points.len(),
                got: deformed_points.len(),
            });
        }
        check_points(&deformed_points, d)?;
        let hit_tol = 1e-14 * bounding_box_diagonal(&control_points);
        check_distinct(&control_points, hit_tol)?;
        Ok(Self {
            control_points,
            deformed_points,
            exponent,
            hit_tol,
        })
    }

    /// `w_k(x)`; exactly `e_k` when `x` hits control point `k`.
    pub fn point_weights(&self, x: &[f64]) -> Vec<f64> {
        let dist: Vec<f64> = self.control_points.iter().map(|c| distance(x, c)).collect();
        let (kmin, dmin) = dist
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(k, m), (j, &v)| if v < m { (j, v) } else { (k, m) });
        let mut w = vec![0.0; dist.len()];
        if dmin <= self.hit_tol {
            w[kmin] = 1.0;
            return w;
        }
        // scaled by the nearest distance so d^{-s} cannot overflow
        let s = self.exponent as i32;
        let mut total = 0.0;
        for (wk, dk) in w.iter_mut().zip(&dist) {
            *wk = (dmin / dk).powi(s);
            total += *wk;
        }
        for wk in &mut w {
            *wk /= total;
        }
        w
    }

    pub fn weights(&self, points: &[Vec<f64>]) -> Result<IdwWeights> {
        check_points(points, self.dim())?;
        Ok(IdwWeights {
            weights: points.par_iter().map(|x| self.point_weights(x)).collect(),
        })
    }

    pub fn set_deformed(&mut self, deformed_points: Vec<Vec<f64>>) -> Result<()> {
        if deformed_points.len() != self.control_points.len() {
            return Err(MorphError::Dimension {
                context: "deformed control points",
                expected: self.control_points.len(),
                got: deformed_points.len(),
            });
        }
        check_points(&deformed_points, self.dim())?;
        self.deformed_points = deformed_points;
        Ok(())
    }

    pub fn deform_with(&self, weights: &IdwWeights, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        self.check_cache(weights, points)?;
        let disp: Vec<Vec<f64>> = self
            .control_points
            .iter()
            .zip(&self.deformed_points)
            .map(|(x, y)| y.iter().zip(x).map(|(a, b)| a - b).collect())
            .collect();
        Ok(points
            .par_iter()
            .zip(&weights.weights)
            .map(|(x, w)| {
                let mut out = x.clone();
                for (wk, dk) in w.iter().zip(&disp) {
                    for (o, v) in out.iter_mut().zip(dk) {
                        *o += wk * v;
                    }
                }
                out
            })
            .collect())
    }

    /// `Σ w_k(x) y_Ck`, the interpolant of the deformed positions
    /// themselves.
    pub fn interpolate_positions(&self, weights: &IdwWeights, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        self.check_cache(weights, points)?;
        let d = self.dim();
        Ok(weights
            .weights
            .par_iter()
            .map(|w| {
                let mut out = vec![0.0; d];
                for (wk, y) in w.iter().zip(&self.deformed_points) {
                    for (o, v) in out.iter_mut().zip(y) {
                        *o += wk * v;
                    }
                }
                out
            })
            .collect())
    }

    fn check_cache(&self, weights: &IdwWeights, points: &[Vec<f64>]) -> Result<()> {
        if weights.weights.len() != points.len() {
            return Err(MorphError::Dimension {
                context: "cached IDW weights",
                expected: points.len(),
                got: weights.weights.len(),
            });
        }
        check_points(points, self.dim())
    }
}

impl Morph for IdwMorph {
    fn dim(&self) -> usize {
        self.control_points[0].len()
    }

    fn deform_point(&self, x: &[f64]) -> Vec<f64> {
        let p = [x.to_vec()];
        let w = IdwWeights {
            weights: vec![self.point_weights(x)],
        };
        self.deform_with(&w, &p).expect("shapes match").pop().unwrap()
    }

    fn deform(&self, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let w = self.weights(points)?;
        self.deform_with(&w, points)
    }
}
