#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mor_core::fom::{fom_solve, AffineSystem, ThermalBlock, THERMAL_REFERENCE_MU};
use mor_core::numkit::{dot, orthonormalize, DenseMatrix, Orthonormalization};
use mor_core::rb::ReducedBasis;

/// Q1 stiffness of the two-material problem assembled directly on the
/// deformed grid at `mu`, restricted to the free dofs.
///
/// Element matrices come from tensor products of the 1D linear stiffness
/// `[1 -1; -1 1]/h` and mass `h/6 [2 1; 1 2]`.
pub fn direct_thermal_matrix(tb: &ThermalBlock, mu: f64) -> DenseMatrix {
    let xs: Vec<f64> = tb
        .grid
        .xs()
        .iter()
        .map(|&x| {
            if x <= THERMAL_REFERENCE_MU {
                x * mu / THERMAL_REFERENCE_MU
            } else {
                mu + (x - THERMAL_REFERENCE_MU) * (1.0 - mu) / (1.0 - THERMAL_REFERENCE_MU)
            }
        })
        .collect();
    let ys = tb.grid.ys();
    let n = tb.dofs.len();
    let mut a = DenseMatrix::zeros(n, n);
    let stiff = |h: f64| [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
    let mass = |h: f64| [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
    for i in 0..xs.len() - 1 {
        for j in 0..ys.len() - 1 {
            let (hx, hy) = (xs[i + 1] - xs[i], ys[j + 1] - ys[j]);
            let sigma = if 0.5 * (xs[i] + xs[i + 1]) < mu { tb.sigma1 } else { tb.sigma2 };
            let (kx, mx, ky, my) = (stiff(hx), mass(hx), stiff(hy), mass(hy));
            let local = [(0, 0), (1, 0), (0, 1), (1, 1)];
            for &(a1, b1) in &local {
                for &(a2, b2) in &local {
                    let v = sigma * (kx[a1][a2] * my[b1][b2] + mx[a1][a2] * ky[b1][b2]);
                    let r = tb.dofs.dof(tb.grid.node(i + a1, j + b1));
                    let c = tb.dofs.dof(tb.grid.node(i + a2, j + b2));
                    if let (Some(r), Some(c)) = (r, c) {
                        a.add_to(r, c, v);
                    }
                }
            }
        }
    }
    a
}

/// Truth snapshots at `mus` plus `extra` random directions, orthonormal in
/// the system's inner product. The thermal-block solution manifold is
/// two-dimensional, so the random part is what makes larger bases
/// non-trivial.
pub fn augmented_basis(sys: &AffineSystem, mus: &[f64], extra: usize, seed: u64) -> ReducedBasis {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = DenseMatrix::zeros(sys.n_dofs(), 0);
    let mut cands: Vec<Vec<f64>> = mus.iter().map(|&m| fom_solve(sys, &[m]).unwrap().coefficients).collect();
    for _ in 0..extra {
        cands.push((0..sys.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    for c in cands {
        if let Orthonormalization::Accepted(z) = orthonormalize(&c, &b, sys.gram()) {
            b.append_column(&z).unwrap();
        }
    }
    ReducedBasis {
        basis: b,
        singular_values: vec![],
        selected_parameters: mus.iter().map(|&m| vec![m]).collect(),
    }
}

/// `‖v‖_μ = sqrt(vᵀ A(μ) v)`.
pub fn energy_norm(sys: &AffineSystem, mu: &[f64], v: &[f64]) -> f64 {
    dot(v, &sys.assemble_matrix(mu).unwrap().matvec(v)).max(0.0).sqrt()
}

pub fn random_matrix(m: usize, n: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn cloud(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}
