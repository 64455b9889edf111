//! Shared helpers for the criterion benches.

use actkit::tensor::Tensor;
use rand::{Rng, SeedableRng};

/// Deterministic uniform tensor in [-4, 4].
pub fn seeded_tensor(shape: Vec<usize>, seed: u64) -> Tensor {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-4.0..4.0)).collect();
    Tensor::from_vec(shape, data).expect("shape matches data")
}
