//! Seeded, splittable random streams.
//!
//! Every random object in an experiment is drawn from a stream derived from a
//! master seed and a path of 32-bit labels, e.g. `[k, trial, object_kind]`.
//! Derivation hashes the seed and path into a ChaCha8 key, so a child stream
//! depends only on its own `(master_seed, path)` and never on how work was
//! scheduled across threads.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};

/// A master seed plus a hierarchical derivation path.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub path: Vec<u32>,
}

impl SeedSpec {
    pub fn new(master_seed: u64, path: impl Into<Vec<u32>>) -> Self {
        Self { master_seed, path: path.into() }
    }

    /// Returns a spec whose path is this one extended by `label`.
    pub fn child(&self, label: u32) -> Self {
        let mut path = self.path.clone();
        path.push(label);
        Self { master_seed: self.master_seed, path }
    }
}

/// Stateful generator of uniform 64-bit words.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Builds the stream owned by `spec`.
pub fn derive_stream(spec: &SeedSpec) -> RandomStream {
    let mut h = mix64(spec.master_seed.wrapping_add(GOLDEN));
    for (depth, &label) in spec.path.iter().enumerate() {
        let tagged = ((depth as u64 + 1) << 32) | u64::from(label);
        h = mix64(h ^ mix64(tagged.wrapping_mul(GOLDEN)));
    }
    h = mix64(h ^ (spec.path.len() as u64).wrapping_mul(GOLDEN));

    let mut key = [0u8; 32];
    let mut state = h;
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(GOLDEN);
        chunk.copy_from_slice(&mix64(state).to_le_bytes());
    }
    RandomStream { rng: ChaCha8Rng::from_seed(key) }
}

/// Draws one standard normal variate (ziggurat).
pub fn standard_normal(stream: &mut RandomStream) -> f64 {
    stream.sample(StandardNormal)
}

/// Draws `count` i.i.d. N(0,1) variates.
pub fn sample_gaussian(stream: &mut RandomStream, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return invalid("sample_gaussian: count must be at least 1");
    }
    Ok((0..count).map(|_| standard_normal(stream)).collect())
}
