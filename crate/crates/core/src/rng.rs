//! Deterministic random streams for data generation.
//!
//! Streams are ChaCha8 keystreams. In replicated mode row `i` of a dataset
//! reads stream `i` under the dataset seed, so any rank can produce any row
//! without coordination and the global dataset does not depend on the rank
//! count. Per-rank mode keys one sequential stream by `seed ^ rank`.
//!
//! Normals come from the Box–Muller transform on uniforms in (0, 1] built
//! from the top 53 bits of each 64-bit word.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream id reserved for benchmark initialisation draws (k-means seeds).
const INIT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Stream {
    fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, spare: None }
    }

    /// Stream owned by global row `row` of a replicated dataset.
    pub fn for_row(seed: u64, row: u64) -> Self {
        Self::new(seed, row)
    }

    /// Sequential stream for one rank in per-rank mode.
    pub fn for_rank(seed: u64, rank: usize) -> Self {
        Self::new(seed ^ rank as u64, 0)
    }

    /// Stream used for initialisation choices, e.g. k-means starting rows.
    pub fn for_init(seed: u64) -> Self {
        Self::new(seed, INIT_STREAM)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on (0, 1].
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n` by widening multiply.
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}
