use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a random stream is used for. Separate purposes never share state,
/// so drawing a permutation cannot shift the noise sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Data = 1,
    Permutation = 2,
    StoppingTime = 3,
    Noise = 4,
}

/// A ChaCha stream keyed by `(seed, replica, purpose, counter)`.
///
/// The key is the ChaCha key itself, so streams for different tuples are
/// independent and any one of them can be regenerated in isolation.
pub fn stream(seed: u64, replica: u64, purpose: Purpose, counter: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&replica.to_le_bytes());
    key[16..24].copy_from_slice(&(purpose as u64).to_le_bytes());
    key[24..].copy_from_slice(&counter.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
