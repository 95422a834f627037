//! Deterministic random streams.
//!
//! Every random quantity in the simulator comes from SplitMix64, which is
//! small enough to be reproduced bit-for-bit in any language:
//!
//! ```text
//! state  += 0x9E3779B97F4A7C15            (wrapping)
//! z       = state
//! z       = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9   (wrapping)
//! z       = (z ^ (z >> 27)) * 0x94D049BB133111EB   (wrapping)
//! output  = z ^ (z >> 31)
//! ```
//!
//! A uniform double in `[0, 1)` is `(output >> 11) * 2^-53`.
//!
//! Per-drop seeds are derived from `(base_seed, n_users, drop_index)` with
//! [`drop_seed`], which chains the SplitMix64 output function (the "mix"
//! below is one SplitMix64 step applied to a fresh state):
//!
//! ```text
//! mix(x)    = splitmix64_output(x + 0x9E3779B97F4A7C15)
//! drop_seed = mix(mix(mix(base_seed) ^ n_users) ^ drop_index)
//! ```

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_MUL_1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_MUL_2: u64 = 0x94D0_49BB_1331_11EB;

/// One SplitMix64 step on a fresh state `x`.
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(MIX_MUL_1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_MUL_2);
    z ^ (z >> 31)
}

/// Seed of one Monte Carlo drop. Independent of the simulated system so that
/// both systems see the same user geometry.
pub fn drop_seed(base_seed: u64, n_users: usize, drop_index: usize) -> u64 {
    mix64(mix64(mix64(base_seed) ^ n_users as u64) ^ drop_index as u64)
}

/// SplitMix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(MIX_MUL_1);
        z = (z ^ (z >> 27)).wrapping_mul(MIX_MUL_2);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
