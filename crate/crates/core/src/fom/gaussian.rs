//! Poisson problem on `[-1, 1]²` driven by a Gaussian source whose center
//! is the parameter.

use super::grid::{assemble_free, element_mass, element_stiffness_x, element_stiffness_y, DofMap, TensorGrid};
use super::{spd_solve, AffineSystem, FomError, ParamDomain, Result, ThetaMap};
use crate::numkit::CsrMatrix;

/// `g(x; μ) = exp(−2(x₁ − μ₁)² − 2(x₂ − μ₂)²)`.
pub fn gaussian_forcing(x: [f64; 2], mu: &[f64]) -> f64 {
    (-2.0 * (x[0] - mu[0]).powi(2) - 2.0 * (x[1] - mu[1]).powi(2)).exp()
}

/// Stiffness part plus what is needed to turn nodal source values into a
/// load vector. The right-hand side of `system` is empty.
#[derive(Clone, Debug)]
pub struct GaussianPoisson {
    pub grid: TensorGrid,
    pub dofs: DofMap,
    pub system: AffineSystem,
    pub alpha_t: f64,
    /// Mass matrix rows of the free dofs against every grid node.
    mass_rows: CsrMatrix,
}

impl GaussianPoisson {
    /// Interpolation points for the source: all grid nodes.
    pub fn nodes(&self) -> Vec<[f64; 2]> {
        self.grid.nodes()
    }

    pub fn forcing(&self) -> fn([f64; 2], &[f64]) -> f64 {
        gaussian_forcing
    }

    pub fn nodal_forcing(&self, mu: &[f64]) -> Vec<f64> {
        self.grid.nodes().iter().map(|&x| gaussian_forcing(x, mu)).collect()
    }

    /// `∫ g_h v` for a nodal (Q1-interpolated) source `g_h`.
    pub fn load_from_nodal(&self, nodal: &[f64]) -> Vec<f64> {
        self.mass_rows.matvec(nodal)
    }

    /// Truth solve with the exact (interpolated) source.
    pub fn solve_exact(&self, mu: &[f64]) -> Result<Vec<f64>> {
        self.system.domain().check(mu)?;
        let a = self.system.assemble_matrix(mu)?;
        let f = self.load_from_nodal(&self.nodal_forcing(mu));
        spd_solve(&a, &f)
    }
}

/// `−α_t Δθ = g` with `θ = 0` on the whole boundary, on an `n × n` grid.
pub fn assemble_gaussian_poisson(n: usize, alpha_t: f64) -> Result<GaussianPoisson> {
    if n < 3 {
        return Err(FomError::GridTooCoarse(n));
    }
    if !(alpha_t > 0.0 && alpha_t.is_finite()) {
        return Err(FomError::NonPositive {
            name: "alpha_t",
            value: alpha_t,
        });
    }
    let grid = TensorGrid::uniform(-1.0, 1.0, n, -1.0, 1.0, n);
    let dofs = DofMap::new(&grid, |i, j| i == 0 || j == 0 || i == n || j == n);
    let stiffness = assemble_free(&grid, &dofs, |i, j| {
        let (hx, hy) = grid.element_size(i, j);
        let kx = element_stiffness_x(hx, hy);
        let ky = element_stiffness_y(hx, hy);
        let mut k = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                k[a][b] = kx[a][b] + ky[a][b];
            }
        }
        Some(k)
    });
    let mass = assemble_free(&grid, &dofs, |i, j| {
        let (hx, hy) = grid.element_size(i, j);
        Some(element_mass(hx, hy))
    });

    let mut t = Vec::new();
    for (i, j) in grid.elements() {
        let nodes = grid.element_nodes(i, j);
        let (hx, hy) = grid.element_size(i, j);
        let me = element_mass(hx, hy);
        for a in 0..4 {
            if let Some(r) = dofs.dof(nodes[a]) {
                for b in 0..4 {
                    t.push((r, nodes[b], me[a][b]));
                }
            }
        }
    }
    let mass_rows = CsrMatrix::from_triplets(dofs.len(), grid.node_count(), &t);

    let gram = CsrMatrix::linear_combination(&[(alpha_t, &stiffness), (1.0, &mass)])?;
    let domain = ParamDomain::new(vec![-1.0, -1.0], vec![1.0, 1.0])?;
    let system = AffineSystem::new(
        vec![stiffness],
        ThetaMap::Constant(vec![alpha_t]),
        Vec::new(),
        ThetaMap::Constant(Vec::new()),
        gram,
        domain,
    )?;
    Ok(GaussianPoisson {
        grid,
        dofs,
        system,
        alpha_t,
        mass_rows,
    })
}
