//! Text-to-speech stand-in: characters are embedded into frames, pushed
//! through the RVQ codec, and rendered to audio in fixed-size chunks.
//!
//! Rendering maps each decoded frame's D components directly to D
//! consecutive samples, so codec error is measurable as waveform SNR with
//! no vocoder in between. Chunks are generated FIFO and never preempted: a
//! chunk starts once the previous chunk is done and every segment feeding it
//! is available. The virtual per-chunk cost is
//! `fixed_s + per_unit_s * frames_in_chunk * q_iterations` (the sequential
//! quantization loop dominates, and its depth is the stage count), with the
//! cold-start extra applied to the first chunk of a warm-up run.

use super::{ClockMode, LatencyModel};
use crate::error::{Error, Result};
use crate::latency::{ChunkEvent, StreamTrace};
use crate::rvq::{decode, encode, CodebookSet, RvqConfig};
use crate::signal::Waveform;
use crate::stages::embed::char_embed_at;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TtsConfig {
    pub rvq: RvqConfig,
    /// Frames per audio chunk. The default makes a chunk roughly 1.5 s of
    /// audio at the default dim and sample rate.
    pub chunk_frames: usize,
    /// Embedding dimension = samples rendered per frame.
    pub dim: usize,
    pub frames_per_char: usize,
    pub sample_rate_hz: u32,
    /// Embedding seed.
    pub seed: u64,
}

impl Default for TtsConfig {
    fn default() -> Self {
        Self {
            rvq: RvqConfig::truncated(16),
            chunk_frames: 2250,
            dim: 16,
            frames_per_char: super::EMBED_FRAMES_PER_CHAR,
            sample_rate_hz: 24_000,
            seed: 42,
        }
    }
}

impl TtsConfig {
    pub fn validate(&self) -> Result<()> {
        self.rvq.validate()?;
        if self.chunk_frames == 0 {
            return Err(Error::Config("chunk_frames must be positive".into()));
        }
        if self.dim == 0 {
            return Err(Error::Config("embedding dim must be positive".into()));
        }
        if self.frames_per_char == 0 {
            return Err(Error::Config("frames_per_char must be positive".into()));
        }
        if self.sample_rate_hz == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        Ok(())
    }

    /// Audio seconds carried by `frames` frames.
    pub fn frames_to_seconds(&self, frames: usize) -> f64 {
        (frames * self.dim) as f64 / self.sample_rate_hz as f64
    }
}

/// One text span handed to the TTS, with its absolute character offset in
/// the utterance and the moment it became available.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub text: String,
    pub char_offset: usize,
    pub available_s: f64,
}

impl Segment {
    pub fn immediate(text: impl Into<String>) -> Self {
        Self { text: text.into(), char_offset: 0, available_s: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AudioChunk {
    pub waveform: Waveform,
    /// Completion time on the stage's timeline (same origin as the segment
    /// availability times).
    pub completion_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TtsOutput {
    pub chunks: Vec<AudioChunk>,
    pub trace: StreamTrace,
    /// Unquantized frames, for reference-based SNR.
    pub reference_frames: Vec<Vec<f64>>,
    sample_rate_hz: u32,
}

impl TtsOutput {
    /// All chunks concatenated.
    pub fn audio(&self) -> Result<Waveform> {
        let parts: Vec<&Waveform> = self.chunks.iter().map(|c| &c.waveform).collect();
        crate::signal::concat(&parts)
    }

    /// The unquantized frames rendered the same way as the chunks.
    pub fn reference_audio(&self) -> Result<Waveform> {
        Waveform::new(
            self.reference_frames.iter().flatten().copied().collect(),
            self.sample_rate_hz,
        )
    }
}

#[derive(Debug, Clone)]
pub struct SynthTts {
    model: LatencyModel,
    cfg: TtsConfig,
    codebooks: Arc<CodebookSet>,
    runs: u32,
}

impl SynthTts {
    pub fn new(model: LatencyModel, cfg: TtsConfig, codebooks: Arc<CodebookSet>) -> Result<Self> {
        cfg.validate()?;
        model.validate()?;
        cfg.rvq.validate_against(&codebooks)?;
        if cfg.dim != codebooks.dim() {
            return Err(Error::Config(format!(
                "embedding dim {} does not match codebook dim {}",
                cfg.dim,
                codebooks.dim()
            )));
        }
        Ok(Self { model, cfg, codebooks, runs: 0 })
    }

    pub fn config(&self) -> &TtsConfig {
        &self.cfg
    }

    /// Synthesizes the segment stream into chunked audio.
    ///
    /// Returns the chunks, a [`StreamTrace`] on the stage timeline, and the
    /// unquantized reference frames.
    pub fn run(&mut self, segments: &[Segment], clock: ClockMode) -> Result<TtsOutput> {
        let started = Instant::now();
        // Embed every segment; remember each frame's availability time.
        let mut frames: Vec<Vec<f64>> = Vec::new();
        let mut frame_available: Vec<f64> = Vec::new();
        for segment in segments {
            let segment_frames = char_embed_at(
                &segment.text,
                self.cfg.dim,
                self.cfg.seed,
                segment.char_offset,
                self.cfg.frames_per_char,
            );
            frame_available.extend(std::iter::repeat_n(segment.available_s, segment_frames.len()));
            frames.extend(segment_frames);
        }
        if frames.is_empty() {
            return Err(Error::Codec("segments produced no frames to synthesize".into()));
        }

        let q = self.cfg.rvq.q_iterations;
        let mut chunks = Vec::new();
        let mut events = Vec::new();
        let mut previous_done = 0.0f64;
        for (chunk_index, range) in chunk_ranges(frames.len(), self.cfg.chunk_frames).enumerate() {
            let chunk_frames = &frames[range.clone()];
            let code = encode(chunk_frames, &self.codebooks, &self.cfg.rvq)?;
            let decoded = decode(&code, &self.codebooks)?;
            let samples: Vec<f64> = decoded.iter().flatten().copied().collect();
            let waveform = Waveform::new(samples, self.cfg.sample_rate_hz)?;

            let completion_s = match clock {
                ClockMode::Virtual => {
                    let available = frame_available[range.clone()]
                        .iter()
                        .cloned()
                        .fold(f64::NEG_INFINITY, f64::max);
                    let units = (chunk_frames.len() * q) as f64;
                    let mut cost = self.model.fixed_s + self.model.per_unit_s * units;
                    if chunk_index == 0 && self.runs < self.model.warmup_runs {
                        cost += self.model.warmup_extra_s;
                    }
                    previous_done.max(available) + cost
                }
                ClockMode::Wall => started.elapsed().as_secs_f64(),
            };
            previous_done = completion_s;
            events.push(ChunkEvent {
                arrival_s: completion_s,
                audio_duration_s: self.cfg.frames_to_seconds(chunk_frames.len()),
            });
            chunks.push(AudioChunk { waveform, completion_s });
        }
        self.runs += 1;
        let generation_end_s = previous_done;
        Ok(TtsOutput {
            chunks,
            trace: StreamTrace::new(events, generation_end_s)?,
            reference_frames: frames,
            sample_rate_hz: self.cfg.sample_rate_hz,
        })
    }
}

fn chunk_ranges(total: usize, chunk: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    (0..total.div_ceil(chunk)).map(move |i| i * chunk..((i + 1) * chunk).min(total))
}
