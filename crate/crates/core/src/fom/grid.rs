//! Tensor-product grids and bilinear (Q1) element kernels.

use crate::io::fmt_f64;
use crate::numkit::CsrMatrix;

/// Rectangular grid given by its node coordinates along each axis.
///
/// Node `(i, j)` has index `j * (nx + 1) + i`; element `(i, j)` spans
/// `[xs[i], xs[i+1]] × [ys[j], ys[j+1]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorGrid {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl TensorGrid {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert!(xs.len() >= 2 && ys.len() >= 2, "grid needs at least one element per axis");
        assert!(xs.windows(2).all(|w| w[0] < w[1]), "x nodes must increase");
        assert!(ys.windows(2).all(|w| w[0] < w[1]), "y nodes must increase");
        Self { xs, ys }
    }

    pub fn uniform(x0: f64, x1: f64, nx: usize, y0: f64, y1: f64, ny: usize) -> Self {
        let line = |a: f64, b: f64, n: usize| -> Vec<f64> {
            (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect()
        };
        Self::new(line(x0, x1, nx), line(y0, y1, ny))
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Element count along x.
    pub fn nx(&self) -> usize {
        self.xs.len() - 1
    }

    pub fn ny(&self) -> usize {
        self.ys.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * self.xs.len() + i
    }

    /// `(i, j)` lattice position of a node index.
    #[inline]
    pub fn node_ij(&self, k: usize) -> (usize, usize) {
        (k % self.xs.len(), k / self.xs.len())
    }

    pub fn coords(&self, k: usize) -> [f64; 2] {
        let (i, j) = self.node_ij(k);
        [self.xs[i], self.ys[j]]
    }

    pub fn nodes(&self) -> Vec<[f64; 2]> {
        (0..self.node_count()).map(|k| self.coords(k)).collect()
    }

    /// Corner nodes of element `(i, j)` ordered
    /// `(x0,y0), (x1,y0), (x1,y1), (x0,y1)`.
    pub fn element_nodes(&self, i: usize, j: usize) -> [usize; 4] {
        [
            self.node(i, j),
            self.node(i + 1, j),
            self.node(i + 1, j + 1),
            self.node(i, j + 1),
        ]
    }

    pub fn element_size(&self, i: usize, j: usize) -> (f64, f64) {
        (self.xs[i + 1] - self.xs[i], self.ys[j + 1] - self.ys[j])
    }

    pub fn elements(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let nx = self.nx();
        (0..self.ny()).flat_map(move |j| (0..nx).map(move |i| (i, j)))
    }
}

/// Local corner `a` as its `(x, y)` offsets in `{0, 1}²`.
const CORNER: [(usize, usize); 4] = [(0, 0), (1, 0), (1, 1), (0, 1)];

fn stiffness_1d(h: f64) -> [[f64; 2]; 2] {
    [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]]
}

fn mass_1d(h: f64) -> [[f64; 2]; 2] {
    [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]]
}

/// `∫ ∂x φ_b ∂x φ_a` on an `hx × hy` rectangle.
pub fn element_stiffness_x(hx: f64, hy: f64) -> [[f64; 4]; 4] {
    tensor(stiffness_1d(hx), mass_1d(hy))
}

/// `∫ ∂y φ_b ∂y φ_a` on an `hx × hy` rectangle.
pub fn element_stiffness_y(hx: f64, hy: f64) -> [[f64; 4]; 4] {
    tensor(mass_1d(hx), stiffness_1d(hy))
}

pub fn element_mass(hx: f64, hy: f64) -> [[f64; 4]; 4] {
    tensor(mass_1d(hx), mass_1d(hy))
}

fn tensor(bx: [[f64; 2]; 2], by: [[f64; 2]; 2]) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for (a, &(ax, ay)) in CORNER.iter().enumerate() {
        for (b, &(bx_, by_)) in CORNER.iter().enumerate() {
            out[a][b] = bx[ax][bx_] * by[ay][by_];
        }
    }
    out
}

/// One Gauss point of a rectangular element with shape data.
#[derive(Clone, Copy, Debug)]
pub struct QuadPoint {
    pub x: [f64; 2],
    pub weight: f64,
    pub phi: [f64; 4],
    pub grad: [[f64; 2]; 4],
}

/// 3×3 Gauss–Legendre rule on element `(i, j)`.
pub fn gauss_points(grid: &TensorGrid, i: usize, j: usize) -> [QuadPoint; 9] {
    let s = (0.6f64).sqrt() / 2.0;
    let nodes = [0.5 - s, 0.5, 0.5 + s];
    let weights = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
    let (hx, hy) = grid.element_size(i, j);
    let (x0, y0) = (grid.xs[i], grid.ys[j]);
    let mut out = [QuadPoint {
        x: [0.0; 2],
        weight: 0.0,
        phi: [0.0; 4],
        grad: [[0.0; 2]; 4],
    }; 9];
    for (qy, (&eta, &wy)) in nodes.iter().zip(&weights).enumerate() {
        for (qx, (&xi, &wx)) in nodes.iter().zip(&weights).enumerate() {
            let fx = [1.0 - xi, xi];
            let fy = [1.0 - eta, eta];
            let dfx = [-1.0 / hx, 1.0 / hx];
            let dfy = [-1.0 / hy, 1.0 / hy];
            let mut phi = [0.0; 4];
            let mut grad = [[0.0; 2]; 4];
            for (a, &(ax, ay)) in CORNER.iter().enumerate() {
                phi[a] = fx[ax] * fy[ay];
                grad[a] = [dfx[ax] * fy[ay], fx[ax] * dfy[ay]];
            }
            out[qy * 3 + qx] = QuadPoint {
                x: [x0 + xi * hx, y0 + eta * hy],
                weight: wx * wy * hx * hy,
                phi,
                grad,
            };
        }
    }
    out
}

/// Map between grid nodes and free (non-Dirichlet) degrees of freedom.
#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    node_to_dof: Vec<Option<usize>>,
    dof_to_node: Vec<usize>,
}

impl DofMap {
    /// Numbers the nodes for which `is_fixed` is false, in node order.
    pub fn new(grid: &TensorGrid, is_fixed: impl Fn(usize, usize) -> bool) -> Self {
        let mut node_to_dof = vec![None; grid.node_count()];
        let mut dof_to_node = Vec::new();
        for (k, slot) in node_to_dof.iter_mut().enumerate() {
            let (i, j) = grid.node_ij(k);
            if !is_fixed(i, j) {
                *slot = Some(dof_to_node.len());
                dof_to_node.push(k);
            }
        }
        Self {
            node_to_dof,
            dof_to_node,
        }
    }

    pub fn len(&self) -> usize {
        self.dof_to_node.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dof_to_node.is_empty()
    }

    #[inline]
    pub fn dof(&self, node: usize) -> Option<usize> {
        self.node_to_dof[node]
    }

    #[inline]
    pub fn node(&self, dof: usize) -> usize {
        self.dof_to_node[dof]
    }

    /// Expands a dof vector to all nodes, fixed nodes set to zero.
    pub fn to_nodal(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.len());
        self.node_to_dof
            .iter()
            .map(|d| d.map_or(0.0, |k| u[k]))
            .collect()
    }

    /// Restriction of a nodal vector to the free dofs.
    pub fn restrict(&self, nodal: &[f64]) -> Vec<f64> {
        self.dof_to_node.iter().map(|&k| nodal[k]).collect()
    }
}

/// Assembles `Σ_e local(e)` over the elements selected by `include`,
/// keeping only free rows and columns. Every element contributes its full
/// pattern (also where the local value is zero) so that matrices assembled
/// on the same grid share one sparsity pattern.
pub fn assemble_free(
    grid: &TensorGrid,
    dofs: &DofMap,
    mut local: impl FnMut(usize, usize) -> Option<[[f64; 4]; 4]>,
) -> CsrMatrix {
    let mut t = Vec::with_capacity(grid.nx() * grid.ny() * 16);
    for (i, j) in grid.elements() {
        let nodes = grid.element_nodes(i, j);
        let ke = local(i, j).unwrap_or([[0.0; 4]; 4]);
        for a in 0..4 {
            let Some(ra) = dofs.dof(nodes[a]) else { continue };
            for b in 0..4 {
                if let Some(cb) = dofs.dof(nodes[b]) {
                    t.push((ra, cb, ke[a][b]));
                }
            }
        }
    }
    CsrMatrix::from_triplets(dofs.len(), dofs.len(), &t)
}

/// Nodal field as CSV with header `x,y,value`, one row per grid node.
pub fn nodal_csv(grid: &TensorGrid, nodal: &[f64]) -> String {
    assert_eq!(nodal.len(), grid.node_count());
    let mut s = String::from("x,y,value\n");
    for (k, v) in nodal.iter().enumerate() {
        let [x, y] = grid.coords(k);
        s.push_str(&format!("{},{},{}\n", fmt_f64(x), fmt_f64(y), fmt_f64(*v)));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum_all(m: &[[f64; 4]; 4]) -> f64 {
        m.iter().flatten().sum()
    }

    #[test]
    fn element_matrices_match_quadrature() {
        let grid = TensorGrid::new(vec![0.0, 0.3], vec![1.0, 1.7]);
        let (hx, hy) = grid.element_size(0, 0);
        let kx = element_stiffness_x(hx, hy);
        let ky = element_stiffness_y(hx, hy);
        let m = element_mass(hx, hy);
        let qp = gauss_points(&grid, 0, 0);
        for a in 0..4 {
            for b in 0..4 {
                let (mut qx, mut qy, mut qm) = (0.0, 0.0, 0.0);
                for p in &qp {
                    qx += p.weight * p.grad[a][0] * p.grad[b][0];
                    qy += p.weight * p.grad[a][1] * p.grad[b][1];
                    qm += p.weight * p.phi[a] * p.phi[b];
                }
                assert!((kx[a][b] - qx).abs() < 1e-13);
                assert!((ky[a][b] - qy).abs() < 1e-13);
                assert!((m[a][b] - qm).abs() < 1e-13);
            }
        }
        // constants are in the kernel of the stiffness; mass integrates to the area
        assert!(sum_all(&kx).abs() < 1e-14 && sum_all(&ky).abs() < 1e-14);
        assert!((sum_all(&m) - hx * hy).abs() < 1e-15);
    }

    #[test]
    fn dof_map_round_trip() {
        let grid = TensorGrid::uniform(0.0, 1.0, 3, 0.0, 1.0, 2);
        let dofs = DofMap::new(&grid, |i, _| i == 3);
        assert_eq!(dofs.len(), 9);
        let u: Vec<f64> = (0..9).map(|k| k as f64 + 1.0).collect();
        let nodal = dofs.to_nodal(&u);
        assert_eq!(nodal[3], 0.0);
        assert_eq!(dofs.restrict(&nodal), u);
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let grid = TensorGrid::uniform(0.0, 1.0, 2, 0.0, 1.0, 2);
        let text = nodal_csv(&grid, &[0.5; 9]);
        assert_eq!(text.lines().count(), 10);
        assert!(text.starts_with("x,y,value\n"));
    }
}
