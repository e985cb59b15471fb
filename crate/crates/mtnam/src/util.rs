//! Small shared helpers: float formatting, hashing, seed derivation.

/// Format a float with 17 significant digits so it round-trips losslessly
/// through text files.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_f64(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}

/// FNV-1a 64-bit hash; used for config and model provenance hashes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Derive an independent named RNG sub-stream from the single run seed.
/// Every source of randomness in the pipeline goes through this, so the
/// global seed fully determines all outputs.
pub fn derive_seed(base: u64, stream: &str) -> u64 {
    splitmix64(base ^ fnv1a64(stream.as_bytes()))
}

/// Logistic sigmoid with the argument clamped to [-500, 500].
pub fn sigmoid(t: f64) -> f64 {
    let t = t.clamp(-500.0, 500.0);
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}
