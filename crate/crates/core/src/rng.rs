//! Counter-split random streams derived from one 64-bit seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tag for a random stream. Distinct purposes never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum Stream {
    /// Direction draws of the stochastic approximation loop.
    Approximation = 1,
    /// Monte Carlo quadrature nodes.
    MonteCarloNodes = 2,
    /// Random phases of time-domain realizations.
    Phases = 3,
    /// Initial-step line search sample.
    StepEstimate = 4,
    /// Randomized property sweeps.
    Sweep = 5,
}

/// Master seed from which every stochastic path of a run is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSequence {
    master: u64,
}

impl SeedSequence {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Independent generator for `(purpose, index)`.
    pub fn rng(&self, purpose: Stream, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(((purpose as u64) << 48) ^ index);
        rng
    }
}
