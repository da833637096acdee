use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// Independent stream for a named pipeline stage. Streams for different
/// stage names never overlap, and adding draws to one stage cannot shift
/// another, so determinism survives local changes.
pub fn stage_rng(master_seed: u64, stage: &str) -> ChaCha12Rng {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(stage.as_bytes());
    let digest = h.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha12Rng::from_seed(seed)
}
