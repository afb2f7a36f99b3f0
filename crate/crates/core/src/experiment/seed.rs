use sha2::{Digest, Sha256};

/// Sub-seed for one pipeline stage: the first 8 bytes (little-endian) of
/// `SHA-256(master as 8 little-endian bytes || stage)`.
pub fn derive_seed(master: u64, stage: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(stage.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}
