//! Seeded randomness for the simulation.

/// SplitMix64 (Steele, Lea & Flood, "Fast splittable pseudorandom number
/// generators", OOPSLA 2014): a counter advanced by a fixed odd constant,
/// pushed through an avalanche finalizer. Chosen because the algorithm is
/// published, trivially portable, and bit-stable across platforms and
/// toolchains, so traces can be compared byte for byte anywhere.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> SplitMix64 {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, bound)`, rejection-sampled to avoid modulo bias.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let r = self.next_u64();
            if r >= threshold {
                return r % bound;
            }
        }
    }
}

/// Collapses a tuple of values into one seed by feeding each through the
/// generator chain. Used to derive independent per-trial seeds from
/// (base seed, policy, set, mode, trial) deterministically.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut acc = 0x243F_6A88_85A3_08D3u64; // arbitrary non-zero start
    for &p in parts {
        let mut rng = SplitMix64::new(acc ^ p);
        acc = rng.next_u64();
    }
    acc
}
