//! Two-material heat conduction on the unit square with a moving interface.
//!
//! Conductivity `σ1` on `[0, μ] × [0, 1]` and `σ2` on `[μ, 1] × [0, 1]`, unit
//! heat flux entering at `x = 0`, zero temperature at `x = 1`, insulated top
//! and bottom. Everything is assembled once on the reference configuration
//! `μ̄ = 0.5` and pulled back by the affine subdomain maps, giving four
//! matrix terms (x- and y-derivative parts on each subdomain).

use super::grid::{assemble_free, element_mass, element_stiffness_x, element_stiffness_y, DofMap, TensorGrid};
use super::{AffineSystem, FomError, ParamDomain, Result, ThetaMap};
use crate::numkit::CsrMatrix;

pub const THERMAL_REFERENCE_MU: f64 = 0.5;

/// `((2μ)⁻¹, 2μ, (2 − 2μ)⁻¹, 2 − 2μ)`, defined for `0 < μ < 1`.
pub fn theta_thermal(mu: f64) -> Result<[f64; 4]> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(FomError::ThetaDomain {
            map: "thermal block",
            value: mu,
        });
    }
    let l = 2.0 * mu;
    let r = 2.0 - 2.0 * mu;
    Ok([1.0 / l, l, 1.0 / r, r])
}

#[derive(Clone, Debug)]
pub struct ThermalBlock {
    /// Reference grid; the interface `x = 0.5` is a grid line.
    pub grid: TensorGrid,
    pub dofs: DofMap,
    pub system: AffineSystem,
    pub sigma1: f64,
    pub sigma2: f64,
    /// Q1 mass matrix on the free dofs (part of the inner product).
    pub mass: CsrMatrix,
}

impl ThermalBlock {
    pub fn nodal(&self, u: &[f64]) -> Vec<f64> {
        self.dofs.to_nodal(u)
    }

    /// Grid on the physical domain at `mu`.
    pub fn physical_grid(&self, mu: f64) -> Result<TensorGrid> {
        theta_thermal(mu)?;
        let xs = self
            .grid
            .xs()
            .iter()
            .map(|&x| {
                if x <= THERMAL_REFERENCE_MU {
                    2.0 * mu * x
                } else {
                    (2.0 - 2.0 * mu) * x + 2.0 * mu - 1.0
                }
            })
            .collect();
        Ok(TensorGrid::new(xs, self.grid.ys().to_vec()))
    }

    /// Default training box for the greedy surrogate.
    pub fn training_domain() -> ParamDomain {
        ParamDomain::interval(0.1, 0.9).expect("valid interval")
    }
}

/// Assembles the four-term affine system on an `n × n` reference grid.
pub fn assemble_thermal_block(n: usize, sigma1: f64, sigma2: f64) -> Result<ThermalBlock> {
    if n < 3 {
        return Err(FomError::GridTooCoarse(n));
    }
    for (name, v) in [("sigma1", sigma1), ("sigma2", sigma2)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(FomError::NonPositive { name, value: v });
        }
    }
    let left = n / 2;
    let right = n - left;
    let mut xs: Vec<f64> = (0..=left).map(|k| 0.5 * k as f64 / left as f64).collect();
    xs.extend((1..=right).map(|k| 0.5 + 0.5 * k as f64 / right as f64));
    let ys: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    let grid = TensorGrid::new(xs, ys);
    let nx = grid.nx();
    let dofs = DofMap::new(&grid, |i, _| i == nx);

    let in_left = |i: usize| i < left;
    let term = |left_side: bool, sigma: f64, x_part: bool| {
        assemble_free(&grid, &dofs, |i, j| {
            if in_left(i) != left_side {
                return None;
            }
            let (hx, hy) = grid.element_size(i, j);
            let mut k = if x_part {
                element_stiffness_x(hx, hy)
            } else {
                element_stiffness_y(hx, hy)
            };
            k.iter_mut().flatten().for_each(|v| *v *= sigma);
            Some(k)
        })
    };
    let terms = vec![
        term(true, sigma1, true),
        term(true, sigma1, false),
        term(false, sigma2, true),
        term(false, sigma2, false),
    ];
    let mass = assemble_free(&grid, &dofs, |i, j| {
        let (hx, hy) = grid.element_size(i, j);
        Some(element_mass(hx, hy))
    });

    // ∫_{x=0} v dy, exact for the piecewise linear traces
    let mut flux = vec![0.0; dofs.len()];
    for j in 0..grid.ny() {
        let hy = grid.ys()[j + 1] - grid.ys()[j];
        for node in [grid.node(0, j), grid.node(0, j + 1)] {
            if let Some(d) = dofs.dof(node) {
                flux[d] += 0.5 * hy;
            }
        }
    }

    let mut gram_terms: Vec<(f64, &CsrMatrix)> = terms.iter().map(|t| (1.0, t)).collect();
    gram_terms.push((1.0, &mass));
    let gram = CsrMatrix::linear_combination(&gram_terms)?;

    let system = AffineSystem::new(
        terms,
        ThetaMap::ThermalBlock,
        vec![flux],
        ThetaMap::Constant(vec![1.0]),
        gram,
        ThermalBlock::training_domain(),
    )?;
    Ok(ThermalBlock {
        grid,
        dofs,
        system,
        sigma1,
        sigma2,
        mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fom::fom_solve;
    use crate::numkit::{norm2, BandCholesky};

    #[test]
    fn theta_closed_forms() {
        assert_eq!(theta_thermal(0.5).unwrap(), [1.0, 1.0, 1.0, 1.0]);
        let t = theta_thermal(0.25).unwrap();
        let expected = [2.0, 0.5, 2.0 / 3.0, 1.5];
        for (a, b) in t.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        for mu in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(matches!(theta_thermal(mu), Err(FomError::ThetaDomain { .. })));
        }
    }

    #[test]
    fn term_counts_and_symmetry() {
        let tb = assemble_thermal_block(8, 1.0, 5.0).unwrap();
        assert_eq!(tb.system.q_a(), 4);
        assert_eq!(tb.system.q_f(), 1);
        assert!(tb.system.is_compliant());
        for mu in [0.1, 0.37, 0.9] {
            assert!(tb.system.assemble_matrix(&[mu]).unwrap().is_symmetric(1e-12));
        }
    }

    #[test]
    fn odd_resolution_keeps_interface_on_grid() {
        let tb = assemble_thermal_block(7, 1.0, 1.0).unwrap();
        assert!(tb.grid.xs().contains(&0.5));
        assert_eq!(tb.grid.nx(), 7);
        assert!(assemble_thermal_block(2, 1.0, 1.0).is_err());
        assert!(assemble_thermal_block(4, 0.0, 1.0).is_err());
    }

    #[test]
    fn homogeneous_material_matches_plain_poisson() {
        let n = 10;
        let sigma = 2.5;
        let tb = assemble_thermal_block(n, sigma, sigma).unwrap();
        let u = fom_solve(&tb.system, &[0.5]).unwrap().coefficients;
        let g = &tb.grid;
        let a = assemble_free(g, &tb.dofs, |i, j| {
            let (hx, hy) = g.element_size(i, j);
            let kx = element_stiffness_x(hx, hy);
            let ky = element_stiffness_y(hx, hy);
            let mut k = [[0.0; 4]; 4];
            for p in 0..4 {
                for q in 0..4 {
                    k[p][q] = sigma * (kx[p][q] + ky[p][q]);
                }
            }
            Some(k)
        });
        let f = tb.system.rhs_terms()[0].clone();
        let v = BandCholesky::new(&a).unwrap().solve(&f);
        let diff: Vec<f64> = u.iter().zip(&v).map(|(p, q)| p - q).collect();
        assert!(norm2(&diff) <= 1e-12 * norm2(&v));
        // 1D profile: u = (1 - x)/σ for a unit flux
        for (d, val) in v.iter().enumerate() {
            let [x, _] = g.coords(tb.dofs.node(d));
            assert!((val - (1.0 - x) / sigma).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_flux_gives_zero_solution() {
        let tb = assemble_thermal_block(6, 1.0, 3.0).unwrap();
        let n = tb.system.n_dofs();
        let sys = tb
            .system
            .clone()
            .with_rhs(vec![vec![0.0; n]], ThetaMap::Constant(vec![1.0]))
            .unwrap();
        let s = fom_solve(&sys, &[0.3]).unwrap();
        assert!(s.coefficients.iter().all(|&v| v == 0.0));
        assert_eq!(s.output, 0.0);
    }

    #[test]
    fn discrete_maximum_principle() {
        let tb = assemble_thermal_block(12, 1.0, 5.0).unwrap();
        for mu in [0.2, 0.5, 0.8] {
            let s = fom_solve(&tb.system, &[mu]).unwrap();
            let nodal = tb.nodal(&s.coefficients);
            let max = nodal.iter().cloned().fold(f64::MIN, f64::max);
            let argmax = nodal.iter().position(|&v| v == max).unwrap();
            assert_eq!(tb.grid.node_ij(argmax).0, 0, "maximum must sit on the flux side");
            for (k, &v) in nodal.iter().enumerate() {
                if tb.grid.node_ij(k).0 < tb.grid.nx() {
                    assert!(v > 0.0);
                }
            }
            let f = tb.system.assemble_rhs(&[mu]).unwrap();
            let a = tb.system.assemble_matrix(&[mu]).unwrap();
            let r: Vec<f64> = a.matvec(&s.coefficients).iter().zip(&f).map(|(p, q)| p - q).collect();
            assert!(norm2(&r) <= 1e-10 * norm2(&f));
        }
    }
}
