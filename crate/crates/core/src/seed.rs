//! Splittable seed derivation for replication streams.
//!
//! Each (master seed, tag...) tuple maps to an independent 64-bit seed via a
//! splitmix64 chain, so replications can run in parallel with no shared RNG
//! state and identical results regardless of scheduling.

/// Returns the next splitmix64 output, advancing the state.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed and a sequence of tags.
pub fn derive(master: u64, tags: &[u64]) -> u64 {
    let mut state = master;
    let mut out = splitmix64(&mut state);
    for &t in tags {
        state = out ^ t.wrapping_mul(0x2545f4914f6cdd1d);
        out = splitmix64(&mut state);
    }
    out
}

/// Uniform f64 in [0, 1) from a splitmix64 stream.
pub fn next_f64(state: &mut u64) -> f64 {
    (splitmix64(state) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
