//! Seeded counter-based pseudo-random stream.
//!
//! The generator is SplitMix64 evaluated at an incrementing counter: draw `i`
//! of a stream seeded with `s` is `splitmix64(s + i)`. The mapping uses only
//! integer arithmetic plus `libm` transcendentals, so a given seed produces
//! the same byte stream on every platform.
//!
//! Draw order is part of the contract: every consumer documents how many
//! values it takes and in which order, and regeneration from the same seed is
//! guaranteed to reproduce identical output.

use crate::math;

/// Counter-based pseudo-random stream.
#[derive(Debug, Clone)]
pub struct Stream {
    seed: u64,
    counter: u64,
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_mul(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream { seed, counter: 0 }
    }

    /// Derive an independent substream; used to give each top-level phase of
    /// a generator its own counter space.
    pub fn substream(&self, tag: u64) -> Stream {
        Stream::new(splitmix64(self.seed ^ splitmix64(tag.wrapping_add(GOLDEN_GAMMA))))
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = splitmix64(self.seed.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)));
        self.counter += 1;
        v
    }

    /// Uniform in [0, 1) with 53 bits of precision. One draw.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Bernoulli with probability `p`. One draw.
    pub fn next_bool(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Standard normal via Box-Muller. Two draws per call (a zero first draw
    /// is redrawn; probability 2^-53). The sine branch of the pair is
    /// discarded so the draw count never depends on earlier output.
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = loop {
            let u = self.next_f64();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.next_f64();
        math::sqrt(-2.0 * math::ln(u1)) * math::cos(2.0 * core::f64::consts::PI * u2)
    }
}
