//! Fixtures shared by the benchmarks.

use paretoflow::harness;
use paretoflow::problems::{self, ProblemInstance};
use paretoflow::GradientMatrix;
use rand::Rng;

/// Random gradient matrix with `m` columns in dimension `n`.
pub fn random_gradients(n: usize, m: usize, seed: u64) -> GradientMatrix {
    let mut r = paretoflow::rng::stream(seed, 0);
    let cols = (0..m)
        .map(|_| (0..n).map(|_| r.gen_range(-1.0..1.0)).collect())
        .collect();
    GradientMatrix::from_columns(cols).expect("columns share a dimension")
}

/// A problem from the registry together with one seeded start.
pub fn problem_with_start(key: &str, seed: u64) -> (ProblemInstance, Vec<f64>) {
    let prob = problems::from_key(key).expect("registered problem key");
    let x0 = harness::sample_starts(&prob, 1, seed).remove(0);
    (prob, x0)
}
