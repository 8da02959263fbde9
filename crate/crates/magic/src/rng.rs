//! Deterministic random streams.
//!
//! Scenario determinization needs random access: the tree search consumes
//! variates out of order (same scenario, different depths, interleaved with
//! other scenarios). A counter-based generator keyed by `(seed, lane, depth)`
//! gives every (scenario, depth) slot its own reproducible sequence without
//! any shared mutable state.

/// splitmix64 finalizer; full-period 64-bit mixer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Collapse a list of key parts into one 64-bit key.
pub fn hash_parts(parts: &[u64]) -> u64 {
    let mut acc = 0x243F_6A88_85A3_08D3u64; // arbitrary nonzero start
    for &p in parts {
        acc = mix64(acc ^ p);
    }
    acc
}

/// Derive a sub-seed from a master seed and a purpose tag.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    hash_parts(&[master, tag])
}

/// Source of uniform variates consumed by simulative step functions.
///
/// `normal` is Box-Muller on two uniforms so that every implementation
/// draws the same, fixed number of variates per call.
pub trait DrawStream {
    fn next_u64(&mut self) -> u64;

    /// Uniform in [0, 1).
    #[inline]
    fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in (0, 1].
    #[inline]
    fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller (always exactly two draws).
    #[inline]
    fn normal(&mut self) -> f64 {
        let u1 = self.uniform_open();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Counter-based stream: the n-th output is a pure function of
/// `(key, n)`, so identical keys replay identical sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterStream {
    key: u64,
    counter: u64,
}

impl CounterStream {
    pub fn new(seed: u64, lane: u64, depth: u64) -> Self {
        Self { key: hash_parts(&[seed, lane, depth]), counter: 0 }
    }

    pub fn from_key(key: u64) -> Self {
        Self { key, counter: 0 }
    }

    pub fn cursor(&self) -> u64 {
        self.counter
    }
}

impl DrawStream for CounterStream {
    #[inline]
    fn next_u64(&mut self) -> u64 {
        let out = mix64(self.key ^ mix64(self.counter));
        self.counter += 1;
        out
    }
}

/// FNV-1a over little-endian words; stable across platforms and builds.
/// Used wherever a hash must survive into output files.
pub fn fnv1a_64(parts: impl IntoIterator<Item = u64>) -> u64 {
    let mut h = 0xCBF2_9CE4_8422_2325u64;
    for p in parts {
        for b in p.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        }
    }
    h
}

pub fn fnv1a_64_bytes(bytes: &[u8]) -> u64 {
    let mut h = 0xCBF2_9CE4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}
