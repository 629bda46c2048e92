//! Deterministic, counter-based random number generation.
//!
//! Every randomized operation in the crate draws from a [`DetRng`], derived
//! from a master seed and a task index. The construction is fixed so that an
//! independent implementation in any language reproduces the streams
//! bit-exactly:
//!
//! 1. Expand the master seed into a 32-byte ChaCha key with four rounds of
//!    SplitMix64 (the standard finalizer with increment 0x9E3779B97F4A7C15);
//!    the i-th key word is the i-th SplitMix64 output, serialized little
//!    endian.
//! 2. Instantiate ChaCha8 (rand_chacha's `ChaCha8Rng`) with that key and set
//!    the stream counter to the task index. Distinct task indices give
//!    independent streams of the same keyed generator, so parallel tasks can
//!    each own a stream while the overall run stays reproducible.
//! 3. All derived draws (residues, bounded integers, unit-interval reals,
//!    Bernoulli) are defined below in terms of raw `next_u32`/`next_u64`
//!    output; none of them go through platform- or crate-version-dependent
//!    samplers.
//!
//! Integer draws use unbiased rejection: for modulus m, a raw draw v is
//! accepted iff v < 2^w - (2^w mod m) and mapped to v mod m. Unit-interval
//! reals take the top 53 bits of a `next_u64`: (v >> 11) * 2^-53.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step: advances the state and returns the mixed output.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic generator for one task of a seeded run.
pub struct DetRng {
    inner: ChaCha8Rng,
}

impl DetRng {
    /// Generator for the given master seed and task index.
    pub fn for_task(seed: u64, task: u64) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(task);
        DetRng { inner }
    }

    /// Generator for the root task (task index 0).
    pub fn new(seed: u64) -> Self {
        DetRng::for_task(seed, 0)
    }

    #[inline]
    pub fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Unbiased uniform residue mod p.
    pub fn residue(&mut self, p: u8) -> u8 {
        let m = p as u32;
        let zone = u32::MAX - (u32::MAX % m + 1) % m;
        loop {
            let v = self.next_u32();
            if v <= zone {
                return (v % m) as u8;
            }
        }
    }

    /// Unbiased uniform integer in [0, m).
    pub fn below(&mut self, m: u64) -> u64 {
        assert!(m > 0, "modulus must be positive");
        let zone = u64::MAX - (u64::MAX % m + 1) % m;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return v % m;
            }
        }
    }

    /// Uniform real in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Bernoulli draw: true with probability `prob`.
    #[inline]
    pub fn bernoulli(&mut self, prob: f64) -> bool {
        self.unit() < prob
    }

    /// A vector of uniform residues mod p.
    pub fn residues(&mut self, p: u8, len: usize) -> Vec<u8> {
        (0..len).map(|_| self.residue(p)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible() {
        let mut a = DetRng::for_task(42, 7);
        let mut b = DetRng::for_task(42, 7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn tasks_get_distinct_streams() {
        let mut a = DetRng::for_task(42, 0);
        let mut b = DetRng::for_task(42, 1);
        let same = (0..100).filter(|_| a.next_u64() == b.next_u64()).count();
        assert!(same < 3, "streams should disagree almost everywhere");
    }

    #[test]
    fn key_expansion_is_splitmix() {
        // First SplitMix64 output for seed 0 is a fixed, externally known
        // value; pin it so the key schedule cannot drift silently.
        let mut s = 0u64;
        assert_eq!(splitmix64(&mut s), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn residues_are_roughly_uniform() {
        let mut rng = DetRng::new(0);
        let mut counts = [0usize; 5];
        let draws = 50_000;
        for _ in 0..draws {
            counts[rng.residue(5) as usize] += 1;
        }
        for &c in &counts {
            let dev = (c as f64 - draws as f64 / 5.0).abs();
            assert!(dev < 500.0, "count {} too far from uniform", c);
        }
    }

    #[test]
    fn unit_is_in_range() {
        let mut rng = DetRng::new(1);
        for _ in 0..10_000 {
            let u = rng.unit();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
