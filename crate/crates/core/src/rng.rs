//! Counter-based Gaussian increments: the draw for `(seed, counter)` is independent of
//! how many other draws were made, so paths replay exactly under any scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Standard normal variate keyed on `(seed, counter)`.
pub fn normal(seed: u64, counter: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(counter);
    StandardNormal.sample(&mut rng)
}

/// Uniform variate in `[0, 1)` keyed on `(seed, counter)`, drawn from a stream disjoint
/// from [`normal`].
pub fn uniform(seed: u64, counter: u64) -> f64 {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(counter);
    rng.gen()
}
