//! Seeded random streams and categorical sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent stream `stream` derived from `seed`.
///
/// Stream 0 drives the environment; stream `i + 1` belongs to agent `i`.
pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws an index from `probs`. Mass lost to rounding goes to the last
/// index with positive probability.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Uniform index in `0..n`.
pub fn uniform_index<R: Rng + ?Sized>(n: usize, rng: &mut R) -> usize {
    rng.gen_range(0..n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categorical_respects_point_mass() {
        let mut rng = stream(3, 0);
        for _ in 0..100 {
            assert_eq!(sample_categorical(&[0.0, 1.0, 0.0], &mut rng), 1);
        }
    }

    #[test]
    fn streams_differ() {
        let a: u64 = stream(1, 0).gen();
        let b: u64 = stream(1, 1).gen();
        assert_ne!(a, b);
        let c: u64 = stream(1, 0).gen();
        assert_eq!(a, c);
    }
}
