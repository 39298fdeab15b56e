//! Seeded random streams and their exact serialization.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub fn stream_from_seed(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent sub-stream `index` of a master seed.
pub fn substream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Hex encoding of the full generator position: key, stream id and word offset.
pub fn encode(rng: &Stream) -> String {
    let mut out = String::with_capacity(64 + 1 + 16 + 1 + 32);
    for b in rng.get_seed() {
        out.push_str(&format!("{b:02x}"));
    }
    out.push(':');
    out.push_str(&format!("{:016x}", rng.get_stream()));
    out.push(':');
    out.push_str(&format!("{:032x}", rng.get_word_pos()));
    out
}

pub fn decode(text: &str) -> Option<Stream> {
    let mut parts = text.trim().split(':');
    let key = parts.next()?;
    let stream = u64::from_str_radix(parts.next()?, 16).ok()?;
    let word_pos = u128::from_str_radix(parts.next()?, 16).ok()?;
    if parts.next().is_some() || key.len() != 64 {
        return None;
    }
    let mut seed = [0u8; 32];
    for (i, byte) in seed.iter_mut().enumerate() {
        *byte = u8::from_str_radix(key.get(2 * i..2 * i + 2)?, 16).ok()?;
    }
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(stream);
    rng.set_word_pos(word_pos);
    Some(rng)
}
