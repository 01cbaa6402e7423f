//! Deterministic benchmarking lab for streaming voice pipelines.
//!
//! The crate provides the pieces of a voice-to-voice loop that matter for
//! latency and codec-quality engineering, with hermetic stand-ins where a
//! production system would run neural models:
//!
//! - [`signal`]: waveforms, 16-bit mono WAV I/O, seeded test-signal
//!   construction.
//! - [`rvq`]: residual vector quantization with stage truncation and
//!   mean/concat index padding for a wider decoder.
//! - [`quality`]: blind SNR estimation (waveform amplitude distribution
//!   analysis) and reference-based SNR.
//! - [`latency`]: chunk-arrival traces and every streaming metric derived
//!   from them (first-chunk latency, RTF, inter-chunk stats, underruns).
//! - [`endpoint`]: energy-based voice activity labeling with a
//!   silence-window end-of-speech rule.
//! - [`stages`]: deterministic ASR/LLM/TTS stand-ins with affine latency
//!   models and cold-start handling.
//! - [`pipeline`]: the end-to-end orchestrator (one-shot or streaming LLM
//!   handoff) under a virtual or wall clock.
//!
//! Everything is reproducible: given the same seeds and configuration, runs
//! produce bit-identical traces, reports, and audio.

pub mod endpoint;
pub mod error;
pub mod latency;
pub mod pipeline;
pub mod quality;
pub mod rng;
pub mod rvq;
pub mod signal;
pub mod stages;

pub use error::{Error, Result};

/// Sentinel reported instead of +inf dB on exact reconstruction.
pub const SNR_SENTINEL_DB: f64 = 200.0;
