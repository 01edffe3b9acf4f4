//! Deterministic, portable pseudo-randomness for reproducible pipelines.
//!
//! The generator is SplitMix64 (Steele, Lea & Flood; the finalizer used by
//! Java's `SplittableRandom`): a 64-bit counter advanced by the golden-ratio
//! increment `0x9E3779B97F4A7C15`, hashed through two xor-multiply rounds.
//! The exact algorithm is pinned here so that a seed written into a run
//! manifest reproduces the same shuffle on any platform or release.

/// SplitMix64 generator. For seed 0 the first output is
/// `0xE220A8397B1DCDAF`, matching the published reference vector.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform-ish draw in `[0, bound)`, defined as `next_u64() % bound`.
    /// The modulo bias is below 2⁻⁵³ for any corpus-sized `bound` and the
    /// simple definition keeps the sequence easy to reproduce elsewhere.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be positive");
        self.next_u64() % bound
    }
}

/// In-place Fisher-Yates shuffle driven by [`SplitMix64`]: for `i` from
/// `len-1` down to `1`, swap `items[i]` with `items[next_below(i+1)]`.
pub fn shuffle<T>(items: &mut [T], seed: u64) {
    let mut rng = SplitMix64::new(seed);
    for i in (1..items.len()).rev() {
        let j = rng.next_below(i as u64 + 1) as usize;
        items.swap(i, j);
    }
}
