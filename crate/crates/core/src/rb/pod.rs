use super::{RbError, ReducedBasis, Result, SnapshotSet};
use crate::numkit::{orthonormalize, sym_eig, DenseMatrix, LinearOperator, Orthonormalization};

/// How many POD modes to keep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PodCriterion {
    Rank(usize),
    /// Smallest `N` with `Σ_{i≤N} σ_i / Σ_i σ_i ≥ fraction`.
    Energy(f64),
}

/// Smallest `N` whose leading singular values reach `fraction` of the
/// plain (not squared) singular value sum.
pub fn energy_rank(sigmas: &[f64], fraction: f64) -> usize {
    let total: f64 = sigmas.iter().sum();
    if total <= 0.0 {
        return 0;
    }
    let mut acc = 0.0;
    for (k, s) in sigmas.iter().enumerate() {
        acc += s;
        if acc / total >= fraction {
            return k + 1;
        }
    }
    sigmas.len()
}

/// POD by the method of snapshots in the `gram` inner product.
///
/// The reported singular values cover every snapshot; eigenvalues of the
/// correlation matrix at round-off level are reported as zero and the kept
/// rank never exceeds the numerical rank.
pub fn pod(snapshots: &SnapshotSet, gram: &dyn LinearOperator, criterion: PodCriterion) -> Result<ReducedBasis> {
    let s = &snapshots.matrix;
    let ns = s.cols();
    match criterion {
        PodCriterion::Rank(n) if n > ns => {
            return Err(RbError::InvalidCriterion(format!("rank {n} exceeds {ns} snapshots")))
        }
        PodCriterion::Energy(f) if !(f > 0.0 && f <= 1.0) => {
            return Err(RbError::InvalidCriterion(format!("energy fraction {f} outside (0, 1]")))
        }
        _ => {}
    }
    if gram.dim() != s.rows() {
        return Err(RbError::Dimension {
            context: "gram vs snapshot length",
            expected: s.rows(),
            got: gram.dim(),
        });
    }
    let cols = s.columns();
    let gcols: Vec<Vec<f64>> = cols.iter().map(|c| gram.apply(c)).collect();
    let corr = DenseMatrix::from_fn(ns, ns, |i, j| {
        let a: f64 = cols[i].iter().zip(&gcols[j]).map(|(x, y)| x * y).sum();
        let b: f64 = cols[j].iter().zip(&gcols[i]).map(|(x, y)| x * y).sum();
        0.5 * (a + b)
    });
    if corr.max_abs() == 0.0 {
        return Err(RbError::ZeroSnapshots);
    }
    let eig = sym_eig(&corr)?;
    let lambda1 = eig.eigenvalues[0];
    let floor = 16.0 * f64::EPSILON * ns as f64 * lambda1;
    let sigmas: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| if l > floor { l.sqrt() } else { 0.0 })
        .collect();
    let numerical_rank = sigmas.iter().filter(|&&x| x > 0.0).count();
    let wanted = match criterion {
        PodCriterion::Rank(n) => n,
        PodCriterion::Energy(f) => energy_rank(&sigmas, f),
    }
    .min(numerical_rank);

    let mut basis = DenseMatrix::zeros(s.rows(), 0);
    for k in 0..wanted {
        let w = eig.eigenvectors.column(k);
        let mode = s.matvec(&w)?;
        match orthonormalize(&mode, &basis, gram) {
            Orthonormalization::Accepted(z) => basis.append_column(&z)?,
            Orthonormalization::Deflated { .. } => break,
        }
    }
    Ok(ReducedBasis {
        basis,
        singular_values: sigmas,
        selected_parameters: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::IdentityOperator;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(cols: Vec<Vec<f64>>) -> SnapshotSet {
        let params = (0..cols.len()).map(|k| vec![k as f64]).collect();
        SnapshotSet::new(DenseMatrix::from_columns(&cols).unwrap(), params).unwrap()
    }

    #[test]
    fn identical_columns_have_rank_one() {
        let v = vec![1.0, 2.0, -1.0, 0.5];
        let s = set(vec![v.clone(), v]);
        for f in [0.5, 0.9, 0.999999] {
            let rb = pod(&s, &IdentityOperator(4), PodCriterion::Energy(f)).unwrap();
            assert_eq!(rb.n(), 1);
            assert_eq!(rb.singular_values[1], 0.0);
        }
        // asking for more than the numerical rank is clamped
        let rb = pod(&s, &IdentityOperator(4), PodCriterion::Rank(2)).unwrap();
        assert_eq!(rb.n(), 1);
    }

    #[test]
    fn orthogonal_columns_by_hand() {
        let s = set(vec![vec![3.0, 0.0, 0.0], vec![0.0, 4.0, 0.0]]);
        let rb = pod(&s, &IdentityOperator(3), PodCriterion::Rank(2)).unwrap();
        assert!((rb.singular_values[0] - 4.0).abs() < 1e-14);
        assert!((rb.singular_values[1] - 3.0).abs() < 1e-14);
        let m0 = rb.basis.column(0);
        let m1 = rb.basis.column(1);
        assert!((m0[1].abs() - 1.0).abs() < 1e-14 && m0[0].abs() < 1e-14);
        assert!((m1[0].abs() - 1.0).abs() < 1e-14 && m1[1].abs() < 1e-14);
    }

    #[test]
    fn energy_criterion_arithmetic() {
        assert_eq!(energy_rank(&[1.0, 1e-2, 1e-8, 1e-9], 0.9999), 2);
        assert_eq!(energy_rank(&[1.0, 1e-2, 1e-8, 1e-9], 0.5), 1);
        assert_eq!(energy_rank(&[2.0, 1.0, 1.0], 1.0), 3);
    }

    #[test]
    fn zero_snapshots_are_rejected() {
        let s = set(vec![vec![0.0; 3], vec![0.0; 3]]);
        assert!(matches!(
            pod(&s, &IdentityOperator(3), PodCriterion::Rank(1)),
            Err(RbError::ZeroSnapshots)
        ));
    }

    #[test]
    fn weighted_modes_are_gram_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 12;
        let b = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let mut g = b.transpose().matmul(&b).unwrap();
        g.axpy(1.0, &DenseMatrix::identity(n)).unwrap();
        let cols: Vec<Vec<f64>> = (0..6).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let rb = pod(&set(cols), &g, PodCriterion::Rank(4)).unwrap();
        assert!(rb.orthonormality_defect(&g) < 1e-10);
    }

    #[test]
    fn truncation_error_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cols: Vec<Vec<f64>> = (0..10).map(|_| (0..60).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let s = set(cols);
        for n in [1, 4, 9] {
            let rb = pod(&s, &IdentityOperator(60), PodCriterion::Rank(n)).unwrap();
            let v = &rb.basis;
            let proj = v.matmul(&v.transpose().matmul(&s.matrix).unwrap()).unwrap();
            let mut r = s.matrix.clone();
            r.axpy(-1.0, &proj).unwrap();
            let tail: f64 = rb.singular_values[n..].iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((r.frobenius_norm() - tail).abs() <= 1e-9 * tail);
        }
    }
}
