//! Active subspaces: Monte Carlo estimate of the uncentered gradient
//! covariance `C = E[∇f ∇fᵀ]`, its eigendecomposition and the split into
//! active and inactive directions.
//!
//! Parameters are rescaled to `[-1, 1]^p` before anything else, so the
//! covariance, the eigenvectors and the active variables all live in
//! normalized coordinates.

mod examples;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::fom::ParamDomain;
use crate::io::{fmt_f64, write_csv};
use crate::numkit::{dot, lstsq, sym_eig, DenseMatrix, NumError};

pub use examples::QuadraticForm;

#[derive(Debug, Error)]
pub enum AsubError {
    #[error("non-finite {what} at sample {sample} (mu = {mu:?})")]
    NonFinite {
        what: &'static str,
        sample: usize,
        mu: Vec<f64>,
    },
    #[error("all sampled gradients vanish; there is no direction information")]
    ZeroGradients,
    #[error("{context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, AsubError>;

/// Relative step of the central-difference fallback, per box edge.
pub const FD_STEP: f64 = 1e-5;
/// Eigenvalues below this fraction of `λ₁` count as zero in gap ratios.
pub const GAP_FLOOR: f64 = 1e-14;

/// How gradients are obtained at the samples.
#[derive(Clone, Copy)]
pub enum Gradient<'a> {
    /// `∇_μ f` in physical coordinates.
    Analytic(&'a (dyn Fn(&[f64]) -> Vec<f64> + Sync)),
    /// Central differences with step `FD_STEP · (upper_k − lower_k)`.
    FiniteDifference,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientSample {
    pub mu: Vec<f64>,
    /// `mu` mapped to `[-1, 1]^p`.
    pub unit: Vec<f64>,
    pub value: f64,
    /// Gradient with respect to the normalized coordinates.
    pub gradient: Vec<f64>,
}

/// Samples drawn uniformly from a parameter box.
#[derive(Clone, Debug)]
pub struct SampledGradients {
    pub domain: ParamDomain,
    pub samples: Vec<GradientSample>,
}

impl SampledGradients {
    /// Wraps precomputed samples, checking lengths and finiteness.
    pub fn new(domain: ParamDomain, samples: Vec<GradientSample>) -> Result<Self> {
        let p = domain.dim();
        for (i, s) in samples.iter().enumerate() {
            for (what, v) in [("mu", &s.mu), ("unit", &s.unit), ("gradient", &s.gradient)] {
                if v.len() != p {
                    return Err(AsubError::Dimension {
                        context: what,
                        expected: p,
                        got: v.len(),
                    });
                }
            }
            if !s.value.is_finite() {
                return Err(non_finite("f", i, &s.mu));
            }
            if s.gradient.iter().any(|g| !g.is_finite()) {
                return Err(non_finite("gradient", i, &s.mu));
            }
        }
        Ok(Self { domain, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// `(normalized μ, f)` pairs, the input of [`summary_data`].
    pub fn unit_values(&self) -> Vec<(Vec<f64>, f64)> {
        self.samples.iter().map(|s| (s.unit.clone(), s.value)).collect()
    }
}

fn non_finite(what: &'static str, sample: usize, mu: &[f64]) -> AsubError {
    AsubError::NonFinite {
        what,
        sample,
        mu: mu.to_vec(),
    }
}

/// Draws `n` uniform samples of the box and evaluates `f` and its gradient.
///
/// Sample `i` uses its own ChaCha stream derived from `seed`, so the result
/// does not depend on the thread count.
pub fn sample_gradients(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    grad: Gradient<'_>,
    domain: &ParamDomain,
    n: usize,
    seed: u64,
) -> Result<SampledGradients> {
    if n == 0 {
        return Err(AsubError::Invalid("at least one sample is required".into()));
    }
    let p = domain.dim();
    let half: Vec<f64> = (0..p).map(|k| 0.5 * (domain.upper()[k] - domain.lower()[k])).collect();
    let samples = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let unit: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let mu = domain.from_unit(&unit);
            let value = f(&mu);
            if !value.is_finite() {
                return Err(non_finite("f", i, &mu));
            }
            let g_mu = match grad {
                Gradient::Analytic(g) => {
                    let g = g(&mu);
                    if g.len() != p {
                        return Err(AsubError::Dimension {
                            context: "gradient length",
                            expected: p,
                            got: g.len(),
                        });
                    }
                    g
                }
                Gradient::FiniteDifference => central_difference(f, &mu, &half),
            };
            if g_mu.iter().any(|v| !v.is_finite()) {
                return Err(non_finite("gradient", i, &mu));
            }
            // chain rule for μ_k = c_k + half_k t_k
            let gradient = g_mu.iter().zip(&half).map(|(g, h)| g * h).collect();
            Ok(GradientSample {
                mu,
                unit,
                value,
                gradient,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampledGradients {
        domain: domain.clone(),
        samples,
    })
}

fn central_difference(f: &(dyn Fn(&[f64]) -> f64 + Sync), mu: &[f64], half: &[f64]) -> Vec<f64> {
    let mut x = mu.to_vec();
    (0..mu.len())
        .map(|k| {
            let h = FD_STEP * 2.0 * half[k];
            x[k] = mu[k] + h;
            let fp = f(&x);
            x[k] = mu[k] - h;
            let fm = f(&x);
            x[k] = mu[k];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Where to cut the spectrum into active and inactive parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Split {
    Fixed(usize),
    /// `M = argmax_{i<p} λ_i / λ_{i+1}`, ties to the smallest `i`.
    LargestGap,
}

#[derive(Clone, Debug)]
pub struct ActiveSubspace {
    /// `Ĉ = (1/N) Σ ∇f_i ∇f_iᵀ`.
    pub covariance: DenseMatrix,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Orthogonal, column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: DenseMatrix,
    pub m: usize,
    pub w1: DenseMatrix,
    /// `p × (p − M)`; has no columns when `M = p`.
    pub w2: DenseMatrix,
    /// `λ_M / λ_{M+1}`; infinite when `λ_{M+1}` is negligible or `M = p`.
    pub gap_ratio: f64,
}

impl ActiveSubspace {
    pub fn dim(&self) -> usize {
        self.covariance.rows()
    }

    /// `λ_i / λ_{i+1}` for `i = 1, …, p−1`.
    pub fn gap_ratios(&self) -> Vec<f64> {
        (1..self.eigenvalues.len()).map(|i| gap_ratio(&self.eigenvalues, i)).collect()
    }
}

fn gap_ratio(lambda: &[f64], m: usize) -> f64 {
    if m >= lambda.len() {
        return f64::INFINITY;
    }
    let floor = GAP_FLOOR * lambda[0];
    if lambda[m] <= floor {
        f64::INFINITY
    } else {
        lambda[m - 1] / lambda[m]
    }
}

fn largest_gap(lambda: &[f64]) -> usize {
    let floor = GAP_FLOOR * lambda[0];
    let mut best = (1, f64::NEG_INFINITY);
    for i in 1..lambda.len() {
        let r = lambda[i - 1] / lambda[i].max(floor);
        if r > best.1 {
            best = (i, r);
        }
    }
    best.0
}

/// Forms `Ĉ`, diagonalizes it and splits the eigenvectors.
pub fn estimate_subspace(grads: &SampledGradients, split: Split) -> Result<ActiveSubspace> {
    let p = grads.dim();
    if grads.is_empty() {
        return Err(AsubError::Invalid("no gradient samples".into()));
    }
    let mut c = DenseMatrix::zeros(p, p);
    for s in &grads.samples {
        for i in 0..p {
            for j in 0..p {
                c.add_to(i, j, s.gradient[i] * s.gradient[j]);
            }
        }
    }
    if c.max_abs() == 0.0 {
        return Err(AsubError::ZeroGradients);
    }
    c.scale(1.0 / grads.len() as f64);
    let eig = sym_eig(&c)?;
    let m = match split {
        Split::Fixed(m) if (1..=p).contains(&m) => m,
        Split::Fixed(m) => return Err(AsubError::Invalid(format!("split {m} outside 1..={p}"))),
        Split::LargestGap if p == 1 => 1,
        Split::LargestGap => largest_gap(&eig.eigenvalues),
    };
    let w1 = eig.eigenvectors.leading_columns(m);
    let w2 = eig.eigenvectors.select_columns(&(m..p).collect::<Vec<_>>());
    Ok(ActiveSubspace {
        covariance: c,
        gap_ratio: gap_ratio(&eig.eigenvalues, m),
        eigenvalues: eig.eigenvalues,
        eigenvectors: eig.eigenvectors,
        m,
        w1,
        w2,
    })
}

/// `(μ_M, η) = (W1ᵀ μ, W2ᵀ μ)` for a normalized parameter `μ`.
pub fn project_active(subspace: &ActiveSubspace, mu: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let active = subspace.w1.tr_matvec(mu)?;
    let inactive = if subspace.w2.cols() == 0 {
        Vec::new()
    } else {
        subspace.w2.tr_matvec(mu)?
    };
    Ok((active, inactive))
}

/// `W1 μ_M + W2 η`.
pub fn recompose(subspace: &ActiveSubspace, active: &[f64], inactive: &[f64]) -> Result<Vec<f64>> {
    let mut mu = subspace.w1.matvec(active)?;
    if subspace.w2.cols() > 0 {
        for (m, v) in mu.iter_mut().zip(subspace.w2.matvec(inactive)?) {
            *m += v;
        }
    }
    Ok(mu)
}

/// Sample count `⌈α k ln p⌉`, at least one.
pub fn n_train_heuristic(k: usize, p: f64, alpha: f64) -> usize {
    let n = (alpha * k as f64 * p.ln()).ceil();
    if n.is_finite() && n >= 1.0 {
        n as usize
    } else {
        1
    }
}

/// One row `(μ_M…, f)` per sample, for sufficient summary plots.
pub fn summary_data(subspace: &ActiveSubspace, samples: &[(Vec<f64>, f64)]) -> Result<Vec<Vec<f64>>> {
    samples
        .iter()
        .map(|(mu, f)| {
            let mut row = subspace.w1.tr_matvec(mu)?;
            row.push(*f);
            Ok(row)
        })
        .collect()
}

/// `‖W_a W_aᵀ − W_b W_bᵀ‖₂` for matrices with orthonormal columns.
pub fn subspace_distance(w_a: &DenseMatrix, w_b: &DenseMatrix) -> Result<f64> {
    if w_a.rows() != w_b.rows() {
        return Err(AsubError::Dimension {
            context: "ambient dimension",
            expected: w_a.rows(),
            got: w_b.rows(),
        });
    }
    if w_a.cols() != w_b.cols() {
        return Err(AsubError::Dimension {
            context: "subspace dimension",
            expected: w_a.cols(),
            got: w_b.cols(),
        });
    }
    let mut diff = w_a.matmul(&w_a.transpose())?;
    diff.axpy(-1.0, &w_b.matmul(&w_b.transpose())?)?;
    if diff.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let eig = sym_eig(&diff)?;
    let norm = eig.eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    Ok(norm.min(1.0))
}

/// `4 λ₁ δ / (λ_n − λ_{n+1})` for a caller-supplied relative covariance
/// error `δ`. Infinite when the gap after `n` is not positive.
pub fn distance_bound(eigenvalues: &[f64], n: usize, delta: f64) -> f64 {
    if n == 0 || n >= eigenvalues.len() {
        return f64::INFINITY;
    }
    let gap = eigenvalues[n - 1] - eigenvalues[n];
    if gap <= 0.0 {
        f64::INFINITY
    } else {
        4.0 * eigenvalues[0] * delta / gap
    }
}

/// Fraction of the variance of `y` explained by a least-squares quadratic
/// in the scalar `x`.
pub fn quadratic_fit_r2(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(AsubError::Invalid("quadratic fit needs at least three paired values".into()));
    }
    let a = DenseMatrix::from_fn(x.len(), 3, |i, j| x[i].powi(j as i32));
    let coef = lstsq(&a, y)?;
    let fit = a.matvec(&coef)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let total: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let resid: f64 = y.iter().zip(&fit).map(|(v, g)| (v - g).powi(2)).sum();
    Ok(if total == 0.0 { 1.0 } else { 1.0 - resid / total })
}

/// Pooled within-bin standard deviation of `y` over `bins` equal-width
/// bins of `x`, relative to the overall standard deviation of `y`.
pub fn binned_spread(x: &[f64], y: &[f64], bins: usize) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() || bins == 0 {
        return Err(AsubError::Invalid("binned spread needs paired values and at least one bin".into()));
    }
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let width = (hi - lo) / bins as f64;
    let bin_of = |v: f64| {
        if width > 0.0 {
            (((v - lo) / width) as usize).min(bins - 1)
        } else {
            0
        }
    };
    let mut sum = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for (&xv, &yv) in x.iter().zip(y) {
        sum[bin_of(xv)] += yv;
        count[bin_of(xv)] += 1;
    }
    let mut within = 0.0;
    for (&xv, &yv) in x.iter().zip(y) {
        let b = bin_of(xv);
        within += (yv - sum[b] / count[b] as f64).powi(2);
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let total: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    Ok(if total == 0.0 { 0.0 } else { (within / total).sqrt() })
}

/// Writes `index,lambda` with 1-based indices.
pub fn write_eigenvalues(path: &Path, subspace: &ActiveSubspace) -> Result<()> {
    let mut text = String::from("index,lambda\n");
    for (i, &l) in subspace.eigenvalues.iter().enumerate() {
        text.push_str(&format!("{},{}\n", i + 1, fmt_f64(l)));
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Writes `mu_M_1,…,mu_M_M,f` rows produced by [`summary_data`].
pub fn write_summary(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let m = rows.first().map_or(1, |r| r.len().saturating_sub(1));
    let mut header: Vec<String> = (1..=m).map(|k| format!("mu_M_{k}")).collect();
    header.push("f".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(path, &header, rows)?;
    Ok(())
}

/// `(1/N) Σ (∇f_iᵀ w)²`, the mean squared directional derivative.
pub fn mean_squared_derivative(grads: &SampledGradients, w: &[f64]) -> f64 {
    grads.samples.iter().map(|s| dot(&s.gradient, w).powi(2)).sum::<f64>() / grads.len() as f64
}
