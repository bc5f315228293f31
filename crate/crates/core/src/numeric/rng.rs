use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Tensor;
use crate::{Error, Result};

/// Seeded deterministic random source.
///
/// The generator is fixed: a ChaCha8 stream cipher keyed via
/// `seed_from_u64`, with all derived draws (floats, ranges, normals,
/// shuffles) implemented here on top of raw `next_u64` output. Identical
/// seeds therefore produce identical draw sequences on every platform.
#[derive(Clone, Debug)]
pub struct RngState {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngState {
    pub const ALGORITHM: &'static str = "chacha8";

    pub fn new(seed: u64) -> Self {
        RngState { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Seed this state was created with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derives an independent child stream. Consumes one draw from the
    /// parent, so fork order matters and is part of a run's contract.
    pub fn fork(&mut self) -> RngState {
        RngState::new(self.rng.next_u64())
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw in `[0, 1)` using the top 53 bits of a `u64`.
    pub fn next_f64(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[0, n)`. Plain modulo; the bias is negligible for
    /// the index ranges used here and keeps the draw sequence frozen.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        self.rng.next_u64() % n
    }

    /// Standard normal draw via Box-Muller (cosine branch only).
    pub fn next_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64(); // (0, 1], keeps ln finite
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        mean + std * self.next_normal()
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

/// Weight initialization schemes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitScheme {
    /// `U(-1/sqrt(fan_in), +1/sqrt(fan_in))` where `fan_in` is the product of
    /// all dimensions except the last (the output dimension).
    UniformScaled,
    /// All zeros (biases).
    Zeros,
}

/// Draws a freshly initialized tensor, advancing `rng` deterministically.
pub fn init_weights(shape: &[usize], scheme: InitScheme, rng: &mut RngState) -> Result<Tensor> {
    if shape.is_empty() {
        return Err(Error::InvalidArgument("init_weights: empty shape".into()));
    }
    match scheme {
        InitScheme::Zeros => Ok(Tensor::zeros(shape)),
        InitScheme::UniformScaled => {
            let fan_in: usize = if shape.len() == 1 {
                shape[0]
            } else {
                shape[..shape.len() - 1].iter().product()
            };
            let bound = 1.0 / (fan_in as f64).sqrt();
            let len: usize = shape.iter().product();
            let data = (0..len).map(|_| rng.uniform(-bound, bound)).collect();
            Tensor::new(shape, data)
        }
    }
}
