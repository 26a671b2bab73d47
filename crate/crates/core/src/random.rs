//! Seeded random association problems for tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::problem::AssignmentProblem;

/// Log-likelihoods (and nulls) uniform in `[-10, 0]`; each pair is gated
/// with probability `gated`.
pub fn random_problem<R: Rng>(
    rng: &mut R,
    n_meas: usize,
    n_land: usize,
    gated: f64,
) -> AssignmentProblem {
    let log_lik = (0..n_meas * n_land)
        .map(|_| {
            if gated > 0.0 && rng.random_bool(gated) {
                f64::NEG_INFINITY
            } else {
                rng.random_range(-10.0..=0.0)
            }
        })
        .collect();
    let nulls = (0..n_meas).map(|_| rng.random_range(-10.0..=0.0)).collect();
    AssignmentProblem::new(n_meas, n_land, log_lik, nulls).expect("finite draws")
}

/// `count` problems with `n_meas ∈ [1, max_meas]` and `n_land ∈ [0, max_land]`,
/// each tagged with its index as `id`.
pub fn random_corpus(
    seed: u64,
    count: usize,
    max_meas: usize,
    max_land: usize,
    gated: f64,
) -> Vec<AssignmentProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = rng.random_range(1..=max_meas);
            let m = rng.random_range(0..=max_land);
            random_problem(&mut rng, n, m, gated).with_meta("id", i)
        })
        .collect()
}
