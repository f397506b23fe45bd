//! Scalar nonlinear diffusion with a non-affine Gaussian viscosity:
//!
//! `u − div(ν(x; μ) ∇u) − γ div(u² ∇u) = s` on `[0, 1]²`, `u = 0` on the
//! boundary. Discretized with Q1 elements and 3×3 Gauss quadrature, the
//! residual reads `R(u; μ) = (M + A(μ) + C(u)) u − F`.

use super::grid::{assemble_free, element_mass, gauss_points, DofMap, TensorGrid};
use super::{FomError, ParamDomain, Result};
use crate::numkit::{norm2, CsrMatrix, DenseMatrix, LuFactor};

pub const NEWTON_TOL: f64 = 1e-9;
pub const NEWTON_MAX_ITERS: usize = 50;

/// `ν(x; μ) = exp(2(−2(x₁ − μ₁ − 0.5)² − 2(x₂ − μ₂ − 0.5)²)) / 100 + 0.01`.
pub fn viscosity(x: [f64; 2], mu: &[f64]) -> f64 {
    let a = x[0] - mu[0] - 0.5;
    let b = x[1] - mu[1] - 0.5;
    (2.0 * (-2.0 * a * a - 2.0 * b * b)).exp() / 100.0 + 0.01
}

#[derive(Clone, Debug)]
pub struct NonlinearFom {
    pub grid: TensorGrid,
    pub dofs: DofMap,
    /// Nonlinearity coefficient; 0 gives a linear problem.
    pub gamma: f64,
    pub domain: ParamDomain,
    mass: CsrMatrix,
    load: Vec<f64>,
    node_elements: Vec<Vec<(usize, usize)>>,
}

impl NonlinearFom {
    /// `n × n` elements, constant source `source`.
    pub fn new(n: usize, gamma: f64, source: f64) -> Result<Self> {
        if n < 3 {
            return Err(FomError::GridTooCoarse(n));
        }
        let grid = TensorGrid::uniform(0.0, 1.0, n, 0.0, 1.0, n);
        let dofs = DofMap::new(&grid, |i, j| i == 0 || j == 0 || i == n || j == n);
        let mass = assemble_free(&grid, &dofs, |i, j| {
            let (hx, hy) = grid.element_size(i, j);
            Some(element_mass(hx, hy))
        });
        let mut load = vec![0.0; dofs.len()];
        for (i, j) in grid.elements() {
            let (hx, hy) = grid.element_size(i, j);
            for node in grid.element_nodes(i, j) {
                if let Some(d) = dofs.dof(node) {
                    load[d] += source * 0.25 * hx * hy;
                }
            }
        }
        let mut node_elements = vec![Vec::new(); grid.node_count()];
        for (i, j) in grid.elements() {
            for node in grid.element_nodes(i, j) {
                node_elements[node].push((i, j));
            }
        }
        let domain = ParamDomain::new(vec![-0.5, -0.5], vec![0.5, 0.5])?;
        Ok(Self {
            grid,
            dofs,
            gamma,
            domain,
            mass,
            load,
            node_elements,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.len()
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    fn element_diffusion(&self, i: usize, j: usize, mu: &[f64]) -> [[f64; 4]; 4] {
        let mut k = [[0.0; 4]; 4];
        for q in gauss_points(&self.grid, i, j) {
            let w = q.weight * viscosity(q.x, mu);
            for a in 0..4 {
                for b in 0..4 {
                    k[a][b] += w * (q.grad[a][0] * q.grad[b][0] + q.grad[a][1] * q.grad[b][1]);
                }
            }
        }
        k
    }

    fn element_convection(&self, i: usize, j: usize, ue: &[f64; 4]) -> [[f64; 4]; 4] {
        let mut k = [[0.0; 4]; 4];
        for q in gauss_points(&self.grid, i, j) {
            let uq: f64 = (0..4).map(|a| q.phi[a] * ue[a]).sum();
            let w = q.weight * self.gamma * uq * uq;
            for a in 0..4 {
                for b in 0..4 {
                    k[a][b] += w * (q.grad[a][0] * q.grad[b][0] + q.grad[a][1] * q.grad[b][1]);
                }
            }
        }
        k
    }

    fn element_values(&self, i: usize, j: usize, nodal: &[f64]) -> [f64; 4] {
        let nodes = self.grid.element_nodes(i, j);
        [nodal[nodes[0]], nodal[nodes[1]], nodal[nodes[2]], nodal[nodes[3]]]
    }

    /// `A(μ)`: `∫ ν(x; μ) ∇φ_j·∇φ_i`.
    pub fn diffusion_matrix(&self, mu: &[f64]) -> CsrMatrix {
        assemble_free(&self.grid, &self.dofs, |i, j| Some(self.element_diffusion(i, j, mu)))
    }

    /// `C(u)`: `γ ∫ u² ∇φ_j·∇φ_i`.
    pub fn convection_matrix(&self, u: &[f64]) -> CsrMatrix {
        let nodal = self.dofs.to_nodal(u);
        assemble_free(&self.grid, &self.dofs, |i, j| {
            Some(self.element_convection(i, j, &self.element_values(i, j, &nodal)))
        })
    }

    /// `(A(μ), C(u))`, both on the common Q1 sparsity pattern.
    pub fn operator_snapshot(&self, u: &[f64], mu: &[f64]) -> (CsrMatrix, CsrMatrix) {
        (self.diffusion_matrix(mu), self.convection_matrix(u))
    }

    /// Individual entries `A(μ)[r][c]`, touching only the elements that
    /// contain both nodes.
    pub fn diffusion_entries(&self, mu: &[f64], entries: &[(usize, usize)]) -> Vec<f64> {
        self.entries(entries, |i, j| self.element_diffusion(i, j, mu))
    }

    /// Individual entries of `C(u)`, where `u_at(node)` supplies nodal
    /// values (zero on the boundary) for the nodes of [`Self::entry_support`].
    pub fn convection_entries(&self, entries: &[(usize, usize)], u_at: impl Fn(usize) -> f64) -> Vec<f64> {
        self.entries(entries, |i, j| {
            let nodes = self.grid.element_nodes(i, j);
            let ue = nodes.map(|k| if self.dofs.dof(k).is_some() { u_at(k) } else { 0.0 });
            self.element_convection(i, j, &ue)
        })
    }

    /// Grid nodes whose values determine the given entries of `C(u)`.
    pub fn entry_support(&self, entries: &[(usize, usize)]) -> Vec<usize> {
        let mut nodes: Vec<usize> = entries
            .iter()
            .flat_map(|&(r, _)| self.node_elements[self.dofs.node(r)].iter())
            .flat_map(|&(i, j)| self.grid.element_nodes(i, j))
            .filter(|&k| self.dofs.dof(k).is_some())
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    fn entries(&self, entries: &[(usize, usize)], local: impl Fn(usize, usize) -> [[f64; 4]; 4]) -> Vec<f64> {
        entries
            .iter()
            .map(|&(r, c)| {
                let (nr, nc) = (self.dofs.node(r), self.dofs.node(c));
                let mut v = 0.0;
                for &(i, j) in &self.node_elements[nr] {
                    let nodes = self.grid.element_nodes(i, j);
                    let (Some(a), Some(b)) = (nodes.iter().position(|&k| k == nr), nodes.iter().position(|&k| k == nc))
                    else {
                        continue;
                    };
                    v += local(i, j)[a][b];
                }
                v
            })
            .collect()
    }

    /// `(M + A(μ) + C(u)) u − load`.
    pub fn residual_with_load(&self, u: &[f64], mu: &[f64], load: &[f64]) -> Vec<f64> {
        let mut r = self.mass.matvec(u);
        let a = self.diffusion_matrix(mu).matvec(u);
        let c = self.convection_matrix(u).matvec(u);
        for k in 0..r.len() {
            r[k] += a[k] + c[k] - load[k];
        }
        r
    }

    pub fn residual(&self, u: &[f64], mu: &[f64]) -> Vec<f64> {
        self.residual_with_load(u, mu, &self.load)
    }

    /// Exact derivative of the residual with respect to `u`.
    pub fn jacobian(&self, u: &[f64], mu: &[f64]) -> CsrMatrix {
        let nodal = self.dofs.to_nodal(u);
        let d = assemble_free(&self.grid, &self.dofs, |i, j| {
            let ue = self.element_values(i, j, &nodal);
            let mut k = self.element_convection(i, j, &ue);
            for q in gauss_points(&self.grid, i, j) {
                let uq: f64 = (0..4).map(|a| q.phi[a] * ue[a]).sum();
                let gu = [
                    (0..4).map(|a| q.grad[a][0] * ue[a]).sum::<f64>(),
                    (0..4).map(|a| q.grad[a][1] * ue[a]).sum::<f64>(),
                ];
                let w = q.weight * 2.0 * self.gamma * uq;
                for a in 0..4 {
                    let gdot = gu[0] * q.grad[a][0] + gu[1] * q.grad[a][1];
                    for b in 0..4 {
                        k[a][b] += w * q.phi[b] * gdot;
                    }
                }
            }
            Some(k)
        });
        CsrMatrix::linear_combination(&[(1.0, &self.mass), (1.0, &self.diffusion_matrix(mu)), (1.0, &d)])
            .expect("shared pattern")
    }

    pub fn solve(&self, mu: &[f64], guess: &[f64]) -> Result<Vec<f64>> {
        self.solve_with_load(mu, guess, &self.load)
    }

    /// Damped Newton until `‖R‖₂ ≤ NEWTON_TOL`.
    pub fn solve_with_load(&self, mu: &[f64], guess: &[f64], load: &[f64]) -> Result<Vec<f64>> {
        self.domain.check(mu)?;
        if guess.len() != self.n_dofs() || load.len() != self.n_dofs() {
            return Err(FomError::Dimension {
                context: "Newton initial guess / load length",
                expected: self.n_dofs(),
                got: guess.len().min(load.len()),
            });
        }
        let mut u = guess.to_vec();
        let mut r = self.residual_with_load(&u, mu, load);
        let mut rn = norm2(&r);
        for _ in 0..NEWTON_MAX_ITERS {
            if rn <= NEWTON_TOL {
                return Ok(u);
            }
            let j = self.jacobian(&u, mu);
            let bw = j.bandwidth();
            let lu = LuFactor::banded(&j.to_dense(), bw, bw)?;
            let du = lu.solve(&r)?;
            let mut step = 1.0;
            loop {
                let trial: Vec<f64> = u.iter().zip(&du).map(|(a, d)| a - step * d).collect();
                let rt = self.residual_with_load(&trial, mu, load);
                let rtn = norm2(&rt);
                if rtn < rn || step < 1e-4 {
                    u = trial;
                    r = rt;
                    rn = rtn;
                    break;
                }
                step *= 0.5;
            }
        }
        if rn <= NEWTON_TOL {
            return Ok(u);
        }
        Err(FomError::NewtonDiverged {
            iterations: NEWTON_MAX_ITERS,
            residual: rn,
        })
    }

    /// Dense Jacobian by central differences, for consistency checks.
    pub fn jacobian_fd(&self, u: &[f64], mu: &[f64], h: f64) -> DenseMatrix {
        let n = u.len();
        let mut jac = DenseMatrix::zeros(n, n);
        let mut up = u.to_vec();
        for c in 0..n {
            up[c] = u[c] + h;
            let rp = self.residual(&up, mu);
            up[c] = u[c] - h;
            let rm = self.residual(&up, mu);
            up[c] = u[c];
            for r in 0..n {
                jac.set(r, c, (rp[r] - rm[r]) / (2.0 * h));
            }
        }
        jac
    }
}
