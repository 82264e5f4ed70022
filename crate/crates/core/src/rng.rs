//! Deterministic pseudorandom streams.
//!
//! Every sampled quantity in this crate (parameter init, train/test split,
//! basis choice, batch draws) comes from a [`Stream`]: a xoshiro256++
//! generator whose state is expanded from a 64-bit seed with SplitMix64, as
//! the xoshiro authors recommend. A master seed fans out into fixed-purpose
//! substreams — substream `k` is simply the `k`-th SplitMix64 output of the
//! master seed — so changing one consumer (say, the epoch count) never
//! reshuffles another's draws.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
fn mix(z: u64) -> u64 {
    let z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    let z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The `k`-th SplitMix64 output of `seed`, with `k` counted from 1.
fn splitmix(seed: u64, k: u64) -> u64 {
    mix(seed.wrapping_add(GAMMA.wrapping_mul(k)))
}

/// Fixed-purpose substreams of a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    /// Model parameter initialization.
    Init = 1,
    /// Train/test split sampling.
    Split = 2,
    /// Basis example selection.
    Basis = 3,
    /// SGD batch draws.
    Batch = 4,
}

/// Seed of the given purpose's substream under `master`.
pub fn substream_seed(master: u64, purpose: Purpose) -> u64 {
    splitmix(master, purpose as u64)
}

/// Seed of the batch stream for one epoch: the `(epoch+1)`-th SplitMix64
/// output of the batch substream's seed, so each epoch draws independently.
pub fn epoch_seed(batch_seed: u64, epoch: usize) -> u64 {
    splitmix(batch_seed, epoch as u64 + 1)
}

/// A xoshiro256++ generator.
#[derive(Debug, Clone)]
pub struct Stream {
    s: [u64; 4],
}

impl Stream {
    /// State is the first four SplitMix64 outputs of `seed`. SplitMix64 is a
    /// bijection, so at most one of the four words can be zero and the
    /// all-zero state is unreachable.
    pub fn new(seed: u64) -> Self {
        let mut s = [0u64; 4];
        for (k, slot) in s.iter_mut().enumerate() {
            *slot = splitmix(seed, k as u64 + 1);
        }
        Stream { s }
    }

    pub fn for_purpose(master: u64, purpose: Purpose) -> Self {
        Stream::new(substream_seed(master, purpose))
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = (s[0].wrapping_add(s[3])).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform index in `[0, n)` via the multiply-shift reduction. The bias
    /// of at most `n / 2^64` is irrelevant at this crate's sample sizes.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (((self.next_u64() as u128) * (n as u128)) >> 64) as usize
    }

    /// Standard normal via Box-Muller; consumes two draws per call.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64(); // (0, 1], keeps ln finite
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// `k` distinct elements of `pool`, drawn by a partial Fisher-Yates
    /// shuffle. Order of the result is the draw order.
    pub fn sample_distinct(&mut self, pool: &[usize], k: usize) -> Vec<usize> {
        debug_assert!(k <= pool.len());
        let mut scratch = pool.to_vec();
        for i in 0..k {
            let j = i + self.below(scratch.len() - i);
            scratch.swap(i, j);
        }
        scratch.truncate(k);
        scratch
    }
}
