//! Binary persistence for trained codebooks.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic   8 bytes  "VLRVQB1\0"
//! u32     n_stages
//! u32     codebook_size
//! u32     dim
//! f64[..] codewords, stage-major then entry-major then component
//! ```
//!
//! Round trips are bit-exact: components are stored as raw IEEE-754 bits.

use super::CodebookSet;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"VLRVQB1\0";

pub fn save_codebooks(codebooks: &CodebookSet) -> Vec<u8> {
    let n_stages = codebooks.n_stages();
    let k = codebooks.codebook_size();
    let dim = codebooks.dim();
    let mut out = Vec::with_capacity(20 + n_stages * k * dim * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(n_stages as u32).to_le_bytes());
    out.extend_from_slice(&(k as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for s in 0..n_stages {
        for entry in codebooks.stage(s) {
            for &x in entry {
                out.extend_from_slice(&x.to_bits().to_le_bytes());
            }
        }
    }
    out
}

pub fn load_codebooks(bytes: &[u8]) -> Result<CodebookSet> {
    if bytes.len() < 20 {
        return Err(Error::Codec("codebook file truncated".into()));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Codec("bad codebook magic; not a codebook file".into()));
    }
    let read_u32 =
        |at: usize| u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]]);
    let n_stages = read_u32(8) as usize;
    let k = read_u32(12) as usize;
    let dim = read_u32(16) as usize;
    let expected = 20 + n_stages
        .checked_mul(k)
        .and_then(|v| v.checked_mul(dim))
        .and_then(|v| v.checked_mul(8))
        .ok_or_else(|| Error::Codec("codebook header sizes overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Codec(format!(
            "codebook file length {} does not match header ({} expected)",
            bytes.len(),
            expected
        )));
    }
    let mut at = 20;
    let mut stages = Vec::with_capacity(n_stages);
    for _ in 0..n_stages {
        let mut stage = Vec::with_capacity(k);
        for _ in 0..k {
            let mut entry = Vec::with_capacity(dim);
            for _ in 0..dim {
                let bits = u64::from_le_bytes([
                    bytes[at],
                    bytes[at + 1],
                    bytes[at + 2],
                    bytes[at + 3],
                    bytes[at + 4],
                    bytes[at + 5],
                    bytes[at + 6],
                    bytes[at + 7],
                ]);
                entry.push(f64::from_bits(bits));
                at += 8;
            }
            stage.push(entry);
        }
        stages.push(stage);
    }
    CodebookSet::new(stages)
}
