//! Counter-based deterministic random streams.
//!
//! Every draw is a pure function of (seed, counter), so per-coefficient
//! sampling is reproducible bit-for-bit no matter how work is scheduled.

/// Stateless generator keyed by a 64-bit seed.
#[derive(Debug, Clone, Copy)]
pub struct CounterRng {
    seed: u64,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    /// 64 pseudo-random bits for the given counter.
    pub fn bits(&self, counter: u64) -> u64 {
        splitmix(
            self.seed
                .wrapping_add(GOLDEN)
                .wrapping_add(counter.wrapping_mul(GOLDEN)),
        )
    }

    /// Uniform draw in [0, 1) with 53-bit resolution.
    pub fn uniform(&self, counter: u64) -> f64 {
        (self.bits(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in [-1/2, 1/2).
    pub fn uniform_symmetric(&self, counter: u64) -> f64 {
        self.uniform(counter) - 0.5
    }

    /// Standard normal draw via Box-Muller; consumes counters 2c and 2c+1.
    pub fn gaussian(&self, counter: u64) -> f64 {
        let u1 = self.uniform(2 * counter).max(f64::MIN_POSITIVE);
        let u2 = self.uniform(2 * counter + 1);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Child stream for a named pipeline stage, so stages never share counters.
    pub fn substream(&self, tag: u64) -> CounterRng {
        CounterRng {
            seed: splitmix(self.seed ^ tag.wrapping_mul(GOLDEN)),
        }
    }
}
