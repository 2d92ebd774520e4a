//! Seeded, platform-independent random numbers.
//!
//! The generator is SplitMix64: a 64-bit counter advanced by the golden
//! gamma `0x9E3779B97F4A7C15` and passed through the `mix64` finalizer, so
//! the `n`-th output is a pure function of `(seed, n)`.
//!
//! - Uniforms on `(0, 1]` take the top 53 bits: `((u >> 11) + 1) · 2⁻⁵³`.
//! - Standard normals use the cosine branch of Box-Muller on two consecutive
//!   uniforms: `√(-2 ln u₁) · cos(2π u₂)`.
//! - Independent substreams are keyed by `mix64(seed + tag) ⊕ index`, where
//!   `tag` separates purposes (means, samples, noise, ...) and `index` is
//!   usually the interval number.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Generator for substream `(tag, index)` of `seed`.
    pub fn substream(seed: u64, tag: u64, index: u64) -> Self {
        Self::new(mix64(seed.wrapping_add(tag)) ^ index)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform on `(0, 1]`.
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        let u1 = self.next_open01();
        let u2 = self.next_open01();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform integer in `0..n` by rejection, `n > 0`.
    pub fn next_below(&mut self, n: u64) -> u64 {
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
