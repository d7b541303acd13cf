//! Deterministic random streams.
//!
//! Every random draw in the crate comes from [`SimRng`], the ChaCha stream
//! cipher with 8 rounds (`rand_chacha::ChaCha8Rng`). A stream is addressed by
//! `(master seed, domain, index)`: the 256-bit key holds the master seed and
//! the domain tag, and the ChaCha stream id holds the index. Replicate `r` of
//! a study therefore draws from the same numbers whether replicates run
//! serially or in parallel, and independently of how many replicates run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Purpose of a stream. Distinct domains never share a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Population = 1,
    Replicate = 2,
    Sampling = 3,
    Selection = 4,
}

pub fn stream(master_seed: u64, domain: Domain, index: u64) -> SimRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Stream for attempt `attempt` of replicate `replicate`. Attempt 0 is the
/// regular draw; retries after a degenerate replicate move to higher attempts.
pub fn replicate_stream(master_seed: u64, replicate: u64, attempt: u64) -> SimRng {
    stream(master_seed, Domain::Replicate, (attempt << 32) | replicate)
}
