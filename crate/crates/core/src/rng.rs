//! Counter-based pseudo-random stream used for channel generation.
//!
//! The generator is SplitMix64 evaluated on an explicit counter: the `n`th
//! output (n = 0, 1, ...) is `mix(seed + (n + 1) * 0x9E3779B97F4A7C15)` with
//! wrapping arithmetic, where `mix` is
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! Uniforms take the top 53 bits. A standard normal pair consumes two
//! consecutive outputs `(a, b)`: `u1 = ((a >> 11) + 1) / 2^53` in (0, 1],
//! `u2 = (b >> 11) / 2^53` in [0, 1), and
//! `(z0, z1) = sqrt(-2 ln u1) * (cos 2 pi u2, sin 2 pi u2)`.
//! A unit-variance circularly symmetric complex Gaussian is
//! `(z0 + i z1) / sqrt(2)` from one such pair.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use crate::linalg::C64;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const TWO_POW_53: f64 = 9_007_199_254_740_992.0;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct CounterRng {
    seed: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    /// Output at an arbitrary position of the stream.
    pub fn at(seed: u64, index: u64) -> u64 {
        mix(seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = Self::at(self.seed, self.counter);
        self.counter += 1;
        v
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / TWO_POW_53
    }

    pub fn next_normal_pair(&mut self) -> (f64, f64) {
        let u1 = ((self.next_u64() >> 11) + 1) as f64 / TWO_POW_53;
        let u2 = (self.next_u64() >> 11) as f64 / TWO_POW_53;
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        (r * c, r * s)
    }

    /// CN(0, 1): real and imaginary parts each have variance 1/2.
    pub fn next_cscg(&mut self) -> C64 {
        let (a, b) = self.next_normal_pair();
        C64::new(a * FRAC_1_SQRT_2, b * FRAC_1_SQRT_2)
    }

    pub fn position(&self) -> u64 {
        self.counter
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // SplitMix64 seeded with 0 (reference implementation by Vigna)
        let mut rng = CounterRng::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(rng.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn cscg_moments() {
        let mut rng = CounterRng::new(12345);
        let n = 200_000;
        let (mut m, mut p, mut re2) = (C64::new(0.0, 0.0), 0.0, 0.0);
        for _ in 0..n {
            let z = rng.next_cscg();
            m += z;
            p += z.norm_sqr();
            re2 += z.re * z.re;
        }
        let nf = n as f64;
        assert!((m / nf).norm() < 0.01);
        assert!((p / nf - 1.0).abs() < 0.01);
        assert!((re2 / nf - 0.5).abs() < 0.01);
    }

    #[test]
    fn uniform_range() {
        let mut rng = CounterRng::new(3);
        for _ in 0..10_000 {
            let u = rng.next_f64();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
