use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

/// Counter-based random stream. A `(seed, stream)` pair fully determines the
/// draw sequence, so replicas can be assigned disjoint streams from one master
/// seed and reproduced independently of scheduling order.
#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha12Rng,
    seed: u64,
    stream: u64,
}

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Stream { rng, seed, stream }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw strictly inside (0, 1): 53 random bits centered in the
    /// unit cell, so neither endpoint is attainable and quantile transforms
    /// never see u ∈ {0, 1}.
    #[inline]
    pub fn open01(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
    }
}
