pub mod asub;
pub mod deim;
pub mod eim;
pub mod morph;
pub mod rom;
pub mod thermal;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mor_core::fom::ParamDomain;

/// Random test parameters drawn from a stream separate from training.
pub fn test_parameters(domain: &ParamDomain, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    domain.sample_uniform(n, &mut rng)
}
