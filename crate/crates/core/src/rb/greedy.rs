use rayon::prelude::*;

use super::{project, RbError, ReducedBasis, Result, RomSystem};
use crate::fom::{fom_solve, AffineSystem};
use crate::numkit::{orthonormalize, DenseMatrix, Orthonormalization};

/// Error bound evaluated at one parameter point for a fixed basis.
pub trait OnlineEstimate: Sync {
    fn estimate(&self, mu: &[f64]) -> Result<f64>;
}

impl<F> OnlineEstimate for F
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    fn estimate(&self, mu: &[f64]) -> Result<f64> {
        self(mu)
    }
}

/// Builds an [`OnlineEstimate`] for the current basis. Called once per
/// greedy iteration, so any offline precomputation belongs here.
pub trait ErrorEstimator {
    fn prepare<'a>(
        &'a self,
        system: &'a AffineSystem,
        basis: &ReducedBasis,
        rom: &'a RomSystem,
    ) -> Result<Box<dyn OnlineEstimate + 'a>>;
}

#[derive(Clone, Debug)]
pub struct GreedyOptions {
    pub tol: f64,
    pub n_max: usize,
    /// First selection; must be a training point. Defaults to the first one.
    pub mu1: Option<Vec<f64>>,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            n_max: 15,
            mu1: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreedyStep {
    pub n: usize,
    pub max_delta: f64,
    pub argmax: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct GreedyResult {
    pub basis: ReducedBasis,
    pub rom: RomSystem,
    /// One entry per basis size, after the basis was enriched.
    pub history: Vec<GreedyStep>,
    /// The chosen snapshot was already in the span.
    pub saturated: bool,
    pub converged: bool,
}

/// Weak greedy over a finite training surrogate.
pub fn greedy(
    system: &AffineSystem,
    training: &[Vec<f64>],
    options: &GreedyOptions,
    estimator: &dyn ErrorEstimator,
) -> Result<GreedyResult> {
    if training.is_empty() {
        return Err(RbError::EmptyTrainingSet);
    }
    if options.n_max == 0 {
        return Err(RbError::InvalidCriterion("n_max must be positive".into()));
    }
    for mu in training {
        system.domain().check(mu)?;
    }
    let mut mu = match &options.mu1 {
        Some(m) if training.contains(m) => m.clone(),
        Some(m) => return Err(RbError::StartNotInTrainingSet(m.clone())),
        None => training[0].clone(),
    };

    let mut vectors = DenseMatrix::zeros(system.n_dofs(), 0);
    let mut selected = Vec::new();
    let mut history = Vec::new();
    let mut saturated = false;
    let mut converged = false;
    let mut last = None;
    loop {
        let snapshot = fom_solve(system, &mu)?.coefficients;
        match orthonormalize(&snapshot, &vectors, system.gram()) {
            Orthonormalization::Accepted(z) => vectors.append_column(&z)?,
            Orthonormalization::Deflated { .. } => {
                saturated = true;
                break;
            }
        }
        selected.push(mu.clone());
        let basis = ReducedBasis {
            basis: vectors.clone(),
            singular_values: Vec::new(),
            selected_parameters: selected.clone(),
        };
        let rom = project(system, &basis)?;
        let (max_delta, arg) = {
            let online = estimator.prepare(system, &basis, &rom)?;
            let deltas: Vec<f64> = training
                .par_iter()
                .map(|m| online.estimate(m))
                .collect::<Result<_>>()?;
            argmax(&deltas)?
        };
        history.push(GreedyStep {
            n: basis.n(),
            max_delta,
            argmax: training[arg].clone(),
        });
        let n = basis.n();
        last = Some((basis, rom));
        if max_delta <= options.tol {
            converged = true;
            break;
        }
        if n >= options.n_max {
            break;
        }
        mu = training[arg].clone();
    }
    let (basis, rom) = match last {
        Some(x) => x,
        None => return Err(RbError::ZeroSnapshots),
    };
    Ok(GreedyResult {
        basis,
        rom,
        history,
        saturated,
        converged,
    })
}

/// First index of the maximum.
fn argmax(values: &[f64]) -> Result<(f64, usize)> {
    let mut best = (f64::NEG_INFINITY, 0);
    for (k, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(RbError::Estimator(format!("non-finite bound {v} at training index {k}")));
        }
        if v > best.0 {
            best = (v, k);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fom::{assemble_thermal_block, ParamDomain};
    use crate::numkit::LinearOperator;
    use crate::rb::rom_solve;

    /// Exact energy-norm error against a full solve; a test-side oracle.
    struct TrueError;

    impl ErrorEstimator for TrueError {
        fn prepare<'a>(
            &'a self,
            system: &'a AffineSystem,
            _basis: &ReducedBasis,
            rom: &'a RomSystem,
        ) -> Result<Box<dyn OnlineEstimate + 'a>> {
            Ok(Box::new(move |mu: &[f64]| -> Result<f64> {
                let truth = fom_solve(system, mu)?.coefficients;
                let u = rom.lift(&rom_solve(rom, mu)?.coefficients)?;
                let e: Vec<f64> = truth.iter().zip(&u).map(|(a, b)| a - b).collect();
                Ok(system.gram().norm(&e))
            }))
        }
    }

    fn training(k: usize) -> Vec<Vec<f64>> {
        ParamDomain::interval(0.1, 0.9).unwrap().uniform_grid(k)
    }

    #[test]
    fn singleton_training_set() {
        let tb = assemble_thermal_block(6, 1.0, 3.0).unwrap();
        let t = vec![vec![0.4]];
        let r = greedy(&tb.system, &t, &GreedyOptions::default(), &TrueError).unwrap();
        assert_eq!(r.basis.n(), 1);
        assert_eq!(r.history.len(), 1);
        assert!(r.converged && !r.saturated);
    }

    #[test]
    fn start_must_be_in_training_set() {
        let tb = assemble_thermal_block(4, 1.0, 3.0).unwrap();
        let opts = GreedyOptions {
            mu1: Some(vec![0.33]),
            ..Default::default()
        };
        assert!(matches!(
            greedy(&tb.system, &training(5), &opts, &TrueError),
            Err(RbError::StartNotInTrainingSet(_))
        ));
        assert!(matches!(
            greedy(&tb.system, &[], &GreedyOptions::default(), &TrueError),
            Err(RbError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn selections_follow_argmax_and_are_reproduced() {
        let tb = assemble_thermal_block(8, 1.0, 5.0).unwrap();
        let t = training(20);
        let opts = GreedyOptions {
            tol: 1e-8,
            n_max: 6,
            mu1: Some(t[0].clone()),
        };
        let r = greedy(&tb.system, &t, &opts, &TrueError).unwrap();
        assert_eq!(r.basis.selected_parameters[0], t[0]);
        for k in 1..r.basis.n() {
            assert_eq!(r.basis.selected_parameters[k], r.history[k - 1].argmax);
        }
        assert!(r.basis.orthonormality_defect(tb.system.gram()) < 1e-10);
        let est = TrueError.prepare(&tb.system, &r.basis, &r.rom).unwrap();
        for mu in &r.basis.selected_parameters {
            assert!(est.estimate(mu).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn saturation_instead_of_looping() {
        // a constant estimator keeps pointing at the first training point
        struct Stuck;
        impl ErrorEstimator for Stuck {
            fn prepare<'a>(
                &'a self,
                _: &'a AffineSystem,
                _: &ReducedBasis,
                _: &'a RomSystem,
            ) -> Result<Box<dyn OnlineEstimate + 'a>> {
                Ok(Box::new(|_: &[f64]| -> Result<f64> { Ok(1.0) }))
            }
        }
        let tb = assemble_thermal_block(4, 1.0, 3.0).unwrap();
        let r = greedy(&tb.system, &training(5), &GreedyOptions::default(), &Stuck).unwrap();
        assert!(r.saturated && !r.converged);
        assert_eq!(r.basis.n(), 1);
    }

    #[test]
    fn argmax_ties_pick_smallest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]).unwrap(), (3.0, 1));
        assert!(argmax(&[1.0, f64::NAN]).is_err());
    }
}
