//! Seeded, portable pseudo-random generator.
//!
//! The algorithm is xoshiro256** (Blackman & Vigna, 2018), seeded by expanding
//! the 64-bit seed through SplitMix64. Both are fixed here so that ports in
//! other languages can reproduce draw sequences exactly:
//!
//! - seeding: starting from `z = seed`, four rounds of
//!   `z += 0x9E3779B97F4A7C15; s = z; s ^= s >> 30; s *= 0xBF58476D1CE4E5B9;
//!   s ^= s >> 27; s *= 0x94D049BB133111EB; s ^= s >> 31` fill `state[0..4]`
//!   (all arithmetic wrapping, 64-bit).
//! - advance: `result = rotl(state[1] * 5, 7) * 9`, then
//!   `t = state[1] << 17; state[2] ^= state[0]; state[3] ^= state[1];
//!   state[1] ^= state[2]; state[0] ^= state[3]; state[2] ^= t;
//!   state[3] = rotl(state[3], 45)`.
//! - floats: `next_f64 = (next_u64 >> 11) · 2⁻⁵³`, uniform in `[0, 1)`.
//! - bounded ints: `below(n) = next_u64 % n` (n is tiny everywhere we use it,
//!   so modulo bias is irrelevant; the rule is part of the format).
//! - derived streams: `SeededRng::derive(seed, stream)` seeds a fresh
//!   generator with `mix64(seed ^ mix64(stream + 1))`, `mix64` being the
//!   SplitMix64 finalizer above without the increment.

/// Deterministic xoshiro256** generator. Same seed ⇒ identical sequence on
/// every platform.
#[derive(Debug, Clone)]
pub struct SeededRng {
    state: [u64; 4],
}

const GOLDEN: u64 = 0x9E3779B97F4A7C15;

fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58476D1CE4E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        let mut z = seed;
        let mut state = [0u64; 4];
        for s in state.iter_mut() {
            z = z.wrapping_add(GOLDEN);
            *s = mix64(z);
        }
        SeededRng { state }
    }

    /// Independent stream derived from `(seed, stream)`; used for parallel
    /// evaluation workers and for giving each training phase its own stream.
    pub fn derive(seed: u64, stream: u64) -> Self {
        SeededRng::new(mix64(seed ^ mix64(stream.wrapping_add(1))))
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.state[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.state[1] << 17;
        self.state[2] ^= self.state[0];
        self.state[3] ^= self.state[1];
        self.state[1] ^= self.state[2];
        self.state[0] ^= self.state[3];
        self.state[2] ^= t;
        self.state[3] = self.state[3].rotate_left(45);
        result
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[0, n)`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        self.next_u64() % n
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Index drawn from an (unnormalized is fine) nonnegative weight vector.
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let r = self.next_f64() * total;
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if r < acc {
                return i;
            }
        }
        weights.len() - 1
    }

    /// In-place Fisher–Yates shuffle, iterating from the back.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = SeededRng::new(42);
        let mut b = SeededRng::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn different_streams_diverge() {
        let mut a = SeededRng::derive(42, 0);
        let mut b = SeededRng::derive(42, 1);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn floats_in_unit_interval() {
        let mut rng = SeededRng::new(3);
        for _ in 0..1000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn shuffle_is_permutation_and_deterministic() {
        let mut xs: Vec<u32> = (0..20).collect();
        let mut ys = xs.clone();
        SeededRng::new(9).shuffle(&mut xs);
        SeededRng::new(9).shuffle(&mut ys);
        assert_eq!(xs, ys);
        let mut sorted = xs.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..20).collect::<Vec<_>>());
    }
}
