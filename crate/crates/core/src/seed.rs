//! Deterministic per-task seed derivation.
//!
//! A task seed is a pure function of the master seed and a small tuple of
//! counters (repeat index, stream tag), so the order in which a parallel
//! runner executes tasks cannot change any result.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// One round of the SplitMix64 output function.
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the task addressed by `path` under `master`.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix(master.wrapping_add(GOLDEN)), |acc, &c| {
            mix(acc ^ c.wrapping_add(GOLDEN).wrapping_mul(GOLDEN))
        })
}

/// Stream tags for the independent random draws of one repeat.
pub mod stream {
    pub const GRAPH: u64 = 1;
    pub const BENEFITS: u64 = 2;
    pub const INIT: u64 = 3;
}
