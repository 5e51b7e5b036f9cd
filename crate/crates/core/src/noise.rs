//! Counter-based Gaussian noise.
//!
//! Every standard-normal vector is a pure function of
//! `(seed, pair, step, substep)`: the four words form the 32-byte key of a
//! fresh ChaCha8 generator. Two chains that ask for the same coordinates get
//! bit-identical noise regardless of call order or thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::integrators::{noise_requirements, NoiseDraw, SchemeId};

/// Sub-step index reserved for the primer draw that initializes the cached
/// noise of the overdamped schemes.
pub const PRIMER_SUBSTEP: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseStream {
    seed: u64,
    pair: u64,
}

impl NoiseStream {
    pub fn new(seed: u64, pair: u64) -> Self {
        Self { seed, pair }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn pair(&self) -> u64 {
        self.pair
    }

    fn rng(&self, step: u64, substep: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.pair.to_le_bytes());
        key[16..24].copy_from_slice(&step.to_le_bytes());
        key[24..].copy_from_slice(&substep.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }

    /// A standard-normal vector of length `dim`.
    pub fn gaussian(&self, step: u64, substep: u64, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        self.fill_gaussian(step, substep, &mut out);
        out
    }

    pub fn fill_gaussian(&self, step: u64, substep: u64, out: &mut [f64]) {
        let mut rng = self.rng(step, substep);
        for o in out.iter_mut() {
            *o = rng.sample(StandardNormal);
        }
    }

    /// All noise one step of `scheme` consumes at `step`.
    pub fn draw(&self, scheme: SchemeId, step: u64, dim: usize) -> NoiseDraw {
        let n = noise_requirements(scheme).standard_normal_vectors();
        NoiseDraw::new((0..n as u64).map(|k| self.gaussian(step, k, dim)).collect())
    }

    /// Refills `draw` in place; `draw` must already have the scheme's shape.
    pub fn refill(&self, step: u64, draw: &mut NoiseDraw) {
        for (k, v) in draw.vectors.iter_mut().enumerate() {
            self.fill_gaussian(step, k as u64, v);
        }
    }

    pub fn primer(&self, dim: usize) -> Vec<f64> {
        self.gaussian(0, PRIMER_SUBSTEP, dim)
    }
}
