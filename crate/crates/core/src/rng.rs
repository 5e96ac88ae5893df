//! Deterministic RNG streams.
//!
//! Every stochastic task derives its own ChaCha8 stream from a root seed plus
//! a tag, so replicate-level work can run in any order (or in parallel) and
//! still reproduce bit-for-bit.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a root seed and a stream tag.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag.wrapping_add(0xa0761d6478bd642f)))
}

/// Derive a child seed from a root seed and two stream tags.
pub fn derive_seed2(seed: u64, tag_a: u64, tag_b: u64) -> u64 {
    derive_seed(derive_seed(seed, tag_a), tag_b)
}

/// The RNG used everywhere in this crate.
pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One standard normal draw by Box-Muller (two uniforms per pair, cached not).
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // open-interval uniforms keep ln() finite
    let u1: f64 = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Fisher-Yates shuffle of indices `0..n`.
pub fn shuffled_indices(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        idx.swap(i, j);
    }
    idx
}

/// `n` indices drawn with replacement from `0..n`.
pub fn resample_indices(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_separated() {
        let a: Vec<f64> = {
            let mut r = stream(derive_seed(7, 1));
            (0..5).map(|_| standard_normal(&mut r)).collect()
        };
        let b: Vec<f64> = {
            let mut r = stream(derive_seed(7, 1));
            (0..5).map(|_| standard_normal(&mut r)).collect()
        };
        let c: Vec<f64> = {
            let mut r = stream(derive_seed(7, 2));
            (0..5).map(|_| standard_normal(&mut r)).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn normal_draws_have_sane_moments() {
        let mut r = stream(42);
        let xs: Vec<f64> = (0..20_000).map(|_| standard_normal(&mut r)).collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
        assert!(m.abs() < 0.03, "mean {m}");
        assert!((v - 1.0).abs() < 0.05, "variance {v}");
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut r = stream(3);
        let mut p = shuffled_indices(100, &mut r);
        p.sort_unstable();
        assert_eq!(p, (0..100).collect::<Vec<_>>());
    }
}
