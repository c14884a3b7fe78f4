//! Keyed pseudorandom stream shared by position selection and the
//! salt-and-pepper attack.
//!
//! The generator is SplitMix64 (Steele, Lea and Flood), chosen because it is
//! fully specified by a handful of 64-bit operations and therefore easy to
//! reproduce bit-for-bit in any language:
//!
//! ```text
//! state += 0x9E37_79B9_7F4A_7C15
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58_476D_1CE4_E5B9
//! z = (z ^ (z >> 27)) * 0x94D0_49BB_1331_11EB
//! return z ^ (z >> 31)
//! ```
//!
//! All arithmetic wraps modulo 2^64. The initial state is the key itself.
//! Bounded draws use `next_u64() % bound`; the modulo bias is at most
//! bound / 2^64 and is accepted so that ports need no rejection loop.

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform index in `0..bound`. `bound` must be non-zero.
    pub fn below(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        (self.next_u64() % bound as u64) as usize
    }
}

/// Forward Fisher–Yates shuffle of `0..n`, stopping after the first `take`
/// slots are fixed. Slot `i` swaps with `i + below(n - i)`.
///
/// With `take == n` this is a full keyed permutation.
pub fn partial_shuffle(n: usize, take: usize, rng: &mut SplitMix64) -> Vec<usize> {
    let take = take.min(n);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..take.min(n.saturating_sub(1)) {
        let j = i + rng.below(n - i);
        idx.swap(i, j);
    }
    idx.truncate(take);
    idx
}
