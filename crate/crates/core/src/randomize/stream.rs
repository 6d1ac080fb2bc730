use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Deterministic random stream keyed by `(master_seed, frame_index, randomizer_id)`.
///
/// Output is a pure function of the key and the number of values drawn so far,
/// so frames can be generated in any order or in parallel.
#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    frame_index: u64,
    randomizer_id: String,
    rng: ChaCha8Rng,
    drawn: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, frame_index: u64, randomizer_id: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(master_seed.to_le_bytes());
        hasher.update(frame_index.to_le_bytes());
        hasher.update((randomizer_id.len() as u64).to_le_bytes());
        hasher.update(randomizer_id.as_bytes());
        let key: [u8; 32] = hasher.finalize().into();
        Self {
            master_seed,
            frame_index,
            randomizer_id: randomizer_id.to_owned(),
            rng: ChaCha8Rng::from_seed(key),
            drawn: 0,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn frame_index(&self) -> u64 {
        self.frame_index
    }

    pub fn randomizer_id(&self) -> &str {
        &self.randomizer_id
    }

    /// Number of values drawn so far.
    pub fn counter(&self) -> u64 {
        self.drawn
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        self.drawn += 1;
        self.rng.random::<f64>()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.drawn += 1;
        self.rng.next_u64()
    }

    /// Uniform integer in `0..n`. `n` must be non-zero.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index() over an empty range");
        self.drawn += 1;
        self.rng.random_range(0..n)
    }

    /// Uniform integer in `min..=max`.
    pub fn int_inclusive(&mut self, min: u32, max: u32) -> u32 {
        self.drawn += 1;
        if min >= max {
            return min;
        }
        self.rng.random_range(min..=max)
    }
}
