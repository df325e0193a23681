//! Deterministic random streams.
//!
//! Every stochastic quantity in the pipeline draws from a ChaCha8 stream keyed
//! by `(seed, domain, index)`. Streams are independent of each other and of
//! how many draws earlier records consumed, so record 7 of a dataset is the
//! same bytes whether generated alone or as part of a batch, on any machine.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// What a stream is used for. Keeps unrelated consumers of the same seed from
/// colliding on a stream id.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamDomain {
    /// Scene sampling, one stream per dataset record.
    Scene = 1,
    /// Wall scatterer placement, one stream per environment seed.
    Environment = 2,
    /// Payload bit generation, one stream per dataset record.
    Bits = 3,
    /// Receiver noise, one stream per (epoch, record).
    Noise = 4,
    /// Network weight initialization.
    WeightInit = 5,
    /// Per-epoch batch shuffling.
    Shuffle = 6,
    /// Train/validation split.
    Split = 7,
    /// Monte Carlo verification suites.
    Verify = 8,
}

/// Stream for a `(seed, domain, index)` triple. `index` must fit in 56 bits.
pub fn stream(seed: u64, domain: StreamDomain, index: u64) -> ChaCha8Rng {
    assert!(index < (1 << 56), "stream index exceeds 56 bits");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 56) | index);
    rng
}

/// Packs a two-level index (e.g. epoch, record) into one stream index.
pub fn index2(major: u64, minor: u64) -> u64 {
    assert!(major < (1 << 24) && minor < (1 << 32), "index2 out of range");
    (major << 32) | minor
}
