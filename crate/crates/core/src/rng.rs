//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from a [`Stream`], a
//! xoshiro256** generator whose 256-bit state is filled from a 64-bit seed
//! by SplitMix64 (the reference seeding procedure for the xoshiro family).
//! Independent sub-streams are obtained with [`derive_seed`], which folds a
//! list of integer tags into the parent seed through the SplitMix64 output
//! function. The derivation is a pure function of `(seed, tags)`, so trial
//! `t` at grid point `k` gets the same instance regardless of scheduling.
//!
//! Conversions are fixed so that other implementations can reproduce the
//! exact values:
//! - uniform `[0, 1)`: `(next_u64 >> 11) * 2^-53`
//! - standard normal: Box–Muller on `u1 = 1 - uniform()`, `u2 = uniform()`;
//!   the cosine branch is returned first and the sine branch is cached for
//!   the next call.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256StarStar};

/// Tags used to split a per-instance seed into per-component streams.
pub mod tags {
    pub const W_FACTOR: u64 = 1;
    pub const MIXING: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const ALGORITHM: u64 = 4;
    pub const PCA: u64 = 5;
    pub const LAYOUT: u64 = 6;
}

/// Fold `tags` into `seed`, one SplitMix64 step per tag.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(seed, |acc, &tag| {
        let mut mixer = SplitMix64::seed_from_u64(acc ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        mixer.next_u64()
    })
}

#[derive(Debug, Clone)]
pub struct Stream {
    inner: Xoshiro256StarStar,
    spare_normal: Option<f64>,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    /// Sub-stream of `seed` labelled by `tags`.
    pub fn derived(seed: u64, tags: &[u64]) -> Self {
        Self::new(derive_seed(seed, tags))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// Uniform direction on the unit sphere of `R^dim`.
    pub fn unit_vector(&mut self, dim: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| self.normal()).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }

    /// Gamma(shape, 1) variate.
    ///
    /// Marsaglia–Tsang squeeze for `shape >= 1`; smaller shapes use
    /// `Gamma(a) = Gamma(a + 1) * U^(1/a)`.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        debug_assert!(shape > 0.0);
        if shape < 1.0 {
            let boosted = self.gamma(shape + 1.0);
            let u = 1.0 - self.uniform();
            return boosted * u.powf(1.0 / shape);
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.normal();
            let t = 1.0 + c * x;
            if t <= 0.0 {
                continue;
            }
            let v = t * t * t;
            let u = self.uniform();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 {
                return d * v;
            }
            if u > 0.0 && u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
                return d * v;
            }
        }
    }

    /// Dirichlet draw with concentration `alpha`; the result sums to one.
    pub fn dirichlet(&mut self, alpha: &[f64]) -> Vec<f64> {
        loop {
            let draws: Vec<f64> = alpha.iter().map(|&a| self.gamma(a)).collect();
            let total: f64 = draws.iter().sum();
            // tiny shapes can underflow every coordinate; redraw in that case
            if total > 0.0 && total.is_finite() {
                return draws.into_iter().map(|g| g / total).collect();
            }
        }
    }

    /// Uniform permutation of `0..n` (Fisher–Yates, top-down).
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = (self.uniform() * (i + 1) as f64) as usize;
            perm.swap(i, j.min(i));
        }
        perm
    }
}
