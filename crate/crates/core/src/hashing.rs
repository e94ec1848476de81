//! Hash functions with fixed, documented definitions.

use sha2::{Digest, Sha256};
use xxhash_rust::xxh3::xxh3_64_with_seed;

/// Separator placed between cells when hashing a row.
pub const UNIT_SEPARATOR: char = '\u{1f}';

/// SplitMix64 finalizer applied to `x + 0x9E3779B97F4A7C15`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// XXH3-64 of the trimmed cells joined by [`UNIT_SEPARATOR`].
pub fn row_hash<S: AsRef<str>>(cells: &[S], seed: u64) -> u64 {
    let mut joined = String::new();
    for (i, cell) in cells.iter().enumerate() {
        if i > 0 {
            joined.push(UNIT_SEPARATOR);
        }
        joined.push_str(cell.as_ref().trim());
    }
    xxh3_64_with_seed(joined.as_bytes(), seed)
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hex SHA-256 over the files of a directory: for each `(relative path,
/// bytes)` in path order, the path, a NUL, the length as 8 little-endian
/// bytes, then the content.
pub fn directory_digest(files: &[(String, Vec<u8>)]) -> String {
    let mut sorted: Vec<&(String, Vec<u8>)> = files.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let mut hasher = Sha256::new();
    for (path, bytes) in sorted {
        hasher.update(path.as_bytes());
        hasher.update([0u8]);
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(bytes);
    }
    hex::encode(hasher.finalize())
}
