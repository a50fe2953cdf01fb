//! Weight initialization.

use crate::prng::SplitMix64;

/// Glorot-uniform bound `sqrt(6 / (fan_in + fan_out))`. Rank-2 shapes are
/// (out × in); rank-1 uses the length for both fans.
pub fn glorot_bound(shape: &[usize]) -> f32 {
    let (fan_in, fan_out) = match shape {
        [n] => (*n, *n),
        [out, inp] => (*inp, *out),
        _ => panic!("glorot init needs rank 1 or 2, got {shape:?}"),
    };
    (6.0f64 / (fan_in + fan_out) as f64).sqrt() as f32
}

/// Samples `(2u − 1)·a` per element in row-major order.
pub fn glorot_uniform(shape: &[usize], rng: &mut SplitMix64) -> Vec<f32> {
    let a = glorot_bound(shape);
    let n: usize = shape.iter().product();
    (0..n).map(|_| (2.0 * rng.next_f32() - 1.0) * a).collect()
}
