//! Character-to-frame embedding standing in for a TTS tokenizer front end.
//!
//! Every character yields `frames_per_char` frames; each frame is a
//! D-dimensional vector whose components are deterministic functions of
//! (seed, absolute character position, character, frame slot). Component
//! magnitudes follow a Gamma(0.4) draw scaled into [-1, 1] with random
//! signs, so rendered frames share the amplitude distribution of speech and
//! blind SNR estimation behaves sensibly on them.
//!
//! Embeddings depend on the character's absolute position in the utterance,
//! not its position inside a segment: feeding one long segment or the same
//! text split across many segments produces identical frames.

use crate::rng::{hash_fold, SplitMix64};

/// Default frames emitted per character.
pub const EMBED_FRAMES_PER_CHAR: usize = 2;

/// Gamma shape of component magnitudes (speech-like heavy tails).
pub const EMBED_GAMMA_SHAPE: f64 = 0.4;

/// Divisor mapping raw Gamma(0.4) magnitudes into the unit range; draws
/// above it (about 0.1% of them) clamp at full scale.
const EMBED_SCALE: f64 = 6.0;

/// Embeds `segment` starting at absolute character position `char_offset`.
pub fn char_embed_at(
    segment: &str,
    dim: usize,
    seed: u64,
    char_offset: usize,
    frames_per_char: usize,
) -> Vec<Vec<f64>> {
    let mut frames = Vec::with_capacity(segment.chars().count() * frames_per_char);
    for (i, ch) in segment.chars().enumerate() {
        let position = (char_offset + i) as u64;
        for slot in 0..frames_per_char {
            let mut h = hash_fold(seed, position);
            h = hash_fold(h, ch as u64);
            h = hash_fold(h, slot as u64);
            let mut rng = SplitMix64::new(h);
            let frame = (0..dim)
                .map(|_| {
                    let magnitude = (rng.next_gamma(EMBED_GAMMA_SHAPE) / EMBED_SCALE).min(1.0);
                    if rng.next_u64() & 1 == 0 {
                        magnitude
                    } else {
                        -magnitude
                    }
                })
                .collect();
            frames.push(frame);
        }
    }
    frames
}

/// Embeds a standalone segment (absolute position zero, default density).
pub fn char_embed(segment: &str, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    char_embed_at(segment, dim, seed, 0, EMBED_FRAMES_PER_CHAR)
}
