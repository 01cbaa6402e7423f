//! Residual vector quantization: codebook training, stage-truncated
//! encode/decode, and index padding for a decoder wider than the number of
//! quantization stages actually run.
//!
//! Encoding is greedy: the base stage quantizes the frame against its
//! codebook, every later stage quantizes the residual left by the stage
//! before it. Decoding sums the selected codewords. Running fewer stages is
//! cheaper and coarser; `pad_indices` widens a truncated code so a decoder
//! expecting the full stage count can still consume it.

mod persist;
mod train;

pub use persist::{load_codebooks, save_codebooks};
pub use train::train_codebooks;

use crate::error::{Error, Result};
use crate::SNR_SENTINEL_DB;
use serde::{Deserialize, Serialize};

/// Per-stage quantizer codebooks.
///
/// Immutable after training; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookSet {
    /// `vectors[stage][entry]` is a `dim`-dimensional codeword.
    vectors: Vec<Vec<Vec<f64>>>,
    codebook_size: usize,
    dim: usize,
}

impl CodebookSet {
    pub fn new(vectors: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::Codec("codebook set needs at least one stage".into()));
        }
        let codebook_size = vectors[0].len();
        if codebook_size < 2 {
            return Err(Error::Codec("codebooks need at least two entries".into()));
        }
        let dim = vectors[0].first().map(|v| v.len()).unwrap_or(0);
        if dim == 0 {
            return Err(Error::Codec("codeword dimension must be positive".into()));
        }
        for (s, stage) in vectors.iter().enumerate() {
            if stage.len() != codebook_size {
                return Err(Error::Codec(format!(
                    "stage {s} has {} entries, expected {codebook_size}",
                    stage.len()
                )));
            }
            for (k, v) in stage.iter().enumerate() {
                if v.len() != dim {
                    return Err(Error::Codec(format!(
                        "stage {s} entry {k} has dimension {}, expected {dim}",
                        v.len()
                    )));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Codec(format!("stage {s} entry {k} holds non-finite values")));
                }
            }
        }
        Ok(Self { vectors, codebook_size, dim })
    }

    pub fn n_stages(&self) -> usize {
        self.vectors.len()
    }

    pub fn codebook_size(&self) -> usize {
        self.codebook_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stage(&self, s: usize) -> &[Vec<f64>] {
        &self.vectors[s]
    }
}

/// Padding strategy for widening a q-stage code to the decoder width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    None,
    Mean,
    Concat,
}

impl std::fmt::Display for Padding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Padding::None => write!(f, "none"),
            Padding::Mean => write!(f, "mean"),
            Padding::Concat => write!(f, "concat"),
        }
    }
}

/// Encoder/decoder configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RvqConfig {
    /// Quantization stages actually run.
    pub q_iterations: usize,
    /// Index width the decoder consumes.
    pub decoder_codebooks: usize,
    pub padding: Padding,
}

impl RvqConfig {
    pub fn new(q_iterations: usize, decoder_codebooks: usize, padding: Padding) -> Result<Self> {
        let cfg = Self { q_iterations, decoder_codebooks, padding };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Convenience: run and decode at the same width, no padding.
    pub fn truncated(q_iterations: usize) -> Self {
        Self { q_iterations, decoder_codebooks: q_iterations, padding: Padding::None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q_iterations == 0 {
            return Err(Error::Codec("q_iterations must be at least 1".into()));
        }
        if self.decoder_codebooks < self.q_iterations {
            return Err(Error::Codec(format!(
                "decoder_codebooks {} smaller than q_iterations {}",
                self.decoder_codebooks, self.q_iterations
            )));
        }
        let widths_match = self.decoder_codebooks == self.q_iterations;
        match self.padding {
            Padding::None if !widths_match => Err(Error::Codec(
                "padding 'none' requires decoder_codebooks == q_iterations".into(),
            )),
            Padding::Mean | Padding::Concat if widths_match => Err(Error::Codec(format!(
                "padding '{}' requires decoder_codebooks > q_iterations",
                self.padding
            ))),
            _ => Ok(()),
        }
    }

    pub fn validate_against(&self, codebooks: &CodebookSet) -> Result<()> {
        self.validate()?;
        if self.decoder_codebooks > codebooks.n_stages() {
            return Err(Error::Codec(format!(
                "decoder_codebooks {} exceeds trained stages {}",
                self.decoder_codebooks,
                codebooks.n_stages()
            )));
        }
        Ok(())
    }
}

/// Per-frame stage indices produced by [`encode`].
#[derive(Debug, Clone, PartialEq)]
pub struct RvqCode {
    indices: Vec<Vec<u32>>,
    q_iterations: usize,
}

impl RvqCode {
    pub fn new(indices: Vec<Vec<u32>>, q_iterations: usize) -> Result<Self> {
        if q_iterations == 0 {
            return Err(Error::Codec("code must use at least one stage".into()));
        }
        let width = indices.first().map(|r| r.len()).unwrap_or(q_iterations);
        if width < q_iterations {
            return Err(Error::Codec(format!(
                "row width {width} smaller than q_iterations {q_iterations}"
            )));
        }
        for (i, row) in indices.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Codec(format!(
                    "frame {i} has width {}, expected {width}",
                    row.len()
                )));
            }
        }
        Ok(Self { indices, q_iterations })
    }

    pub fn frames(&self) -> &[Vec<u32>] {
        &self.indices
    }

    pub fn n_frames(&self) -> usize {
        self.indices.len()
    }

    /// Stages that were actually quantized (before padding).
    pub fn q_iterations(&self) -> usize {
        self.q_iterations
    }

    /// Width of each row after padding.
    pub fn width(&self) -> usize {
        self.indices.first().map(|r| r.len()).unwrap_or(self.q_iterations)
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest codeword by squared Euclidean distance; ties break to the lowest
/// index.
pub(crate) fn nearest_entry(stage: &[Vec<f64>], point: &[f64]) -> usize {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (k, entry) in stage.iter().enumerate() {
        let d = squared_distance(entry, point);
        if d < best_dist {
            best_dist = d;
            best = k;
        }
    }
    best
}

/// Greedy per-stage quantization of one frame through the first `q` stages.
pub fn encode_frame(frame: &[f64], codebooks: &CodebookSet, q: usize) -> Result<Vec<u32>> {
    if frame.len() != codebooks.dim() {
        return Err(Error::Codec(format!(
            "frame dimension {} does not match codebook dimension {}",
            frame.len(),
            codebooks.dim()
        )));
    }
    if q == 0 || q > codebooks.n_stages() {
        return Err(Error::Codec(format!(
            "q {q} out of range 1..={}",
            codebooks.n_stages()
        )));
    }
    let mut residual = frame.to_vec();
    let mut indices = Vec::with_capacity(q);
    for s in 0..q {
        let stage = codebooks.stage(s);
        let k = nearest_entry(stage, &residual);
        for (r, c) in residual.iter_mut().zip(&stage[k]) {
            *r -= c;
        }
        indices.push(k as u32);
    }
    Ok(indices)
}

/// Sums the selected codewords of the first `indices.len()` stages.
pub fn decode_frame(indices: &[u32], codebooks: &CodebookSet) -> Result<Vec<f64>> {
    if indices.is_empty() {
        return Err(Error::Codec("cannot decode an empty index list".into()));
    }
    if indices.len() > codebooks.n_stages() {
        return Err(Error::Codec(format!(
            "code uses {} stages but only {} are trained",
            indices.len(),
            codebooks.n_stages()
        )));
    }
    let mut out = vec![0.0; codebooks.dim()];
    for (s, &k) in indices.iter().enumerate() {
        let stage = codebooks.stage(s);
        let entry = stage.get(k as usize).ok_or_else(|| {
            Error::Codec(format!("index {k} out of range for stage {s} (size {})", stage.len()))
        })?;
        for (o, c) in out.iter_mut().zip(entry) {
            *o += c;
        }
    }
    Ok(out)
}

/// Round half up, for non-negative means.
fn round_half_up(x: f64) -> u32 {
    (x + 0.5).floor() as u32
}

/// Widens `indices` to `target_len` entries.
///
/// `mean` appends the rounded (half-up) arithmetic mean of the input
/// indices, clamped to the valid index range; `concat` repeats the input
/// cyclically and truncates the final repetition.
pub fn pad_indices(
    indices: &[u32],
    target_len: usize,
    strategy: Padding,
    codebook_size: usize,
) -> Result<Vec<u32>> {
    if indices.is_empty() {
        return Err(Error::Codec("cannot pad an empty index list".into()));
    }
    if target_len < indices.len() {
        return Err(Error::Codec(format!(
            "target length {target_len} shorter than input {}",
            indices.len()
        )));
    }
    let mut out = Vec::with_capacity(target_len);
    out.extend_from_slice(indices);
    match strategy {
        Padding::None => {
            if target_len != indices.len() {
                return Err(Error::Codec("padding 'none' cannot widen a code".into()));
            }
        }
        Padding::Mean => {
            let mean = indices.iter().map(|&i| i as f64).sum::<f64>() / indices.len() as f64;
            let fill = round_half_up(mean).min(codebook_size.saturating_sub(1) as u32);
            out.resize(target_len, fill);
        }
        Padding::Concat => {
            let mut i = 0;
            while out.len() < target_len {
                out.push(indices[i % indices.len()]);
                i += 1;
            }
        }
    }
    Ok(out)
}

/// Encodes every frame at `cfg.q_iterations` stages, then pads each row to
/// `cfg.decoder_codebooks`.
pub fn encode(frames: &[Vec<f64>], codebooks: &CodebookSet, cfg: &RvqConfig) -> Result<RvqCode> {
    cfg.validate_against(codebooks)?;
    let mut rows = Vec::with_capacity(frames.len());
    for frame in frames {
        let indices = encode_frame(frame, codebooks, cfg.q_iterations)?;
        let row = if cfg.padding == Padding::None {
            indices
        } else {
            pad_indices(&indices, cfg.decoder_codebooks, cfg.padding, codebooks.codebook_size())?
        };
        rows.push(row);
    }
    RvqCode::new(rows, cfg.q_iterations)
}

/// Decodes every row of `code` against `codebooks`.
pub fn decode(code: &RvqCode, codebooks: &CodebookSet) -> Result<Vec<Vec<f64>>> {
    code.frames().iter().map(|row| decode_frame(row, codebooks)).collect()
}

/// Reconstruction SNR of encoding `frames` under `cfg`, in dB.
///
/// `10*log10(sum ||frame||^2 / sum ||frame - decoded||^2)`; exact
/// reconstruction reports the [`SNR_SENTINEL_DB`] sentinel.
pub fn reconstruction_snr_db(
    frames: &[Vec<f64>],
    codebooks: &CodebookSet,
    cfg: &RvqConfig,
) -> Result<f64> {
    if frames.is_empty() {
        return Err(Error::Codec("cannot measure SNR of zero frames".into()));
    }
    let code = encode(frames, codebooks, cfg)?;
    let decoded = decode(&code, codebooks)?;
    let mut signal = 0.0;
    let mut error = 0.0;
    for (f, d) in frames.iter().zip(&decoded) {
        signal += f.iter().map(|x| x * x).sum::<f64>();
        error += squared_distance(f, d);
    }
    if signal <= 0.0 {
        return Err(Error::Codec("zero-power input has no SNR".into()));
    }
    if error == 0.0 {
        return Ok(SNR_SENTINEL_DB);
    }
    Ok(10.0 * (signal / error).log10())
}
