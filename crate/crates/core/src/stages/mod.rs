//! Deterministic ASR/LLM/TTS stand-ins.
//!
//! Each stage does real (if synthetic) work — hashing audio into a
//! transcript, expanding a templated reply into tokens, embedding characters
//! and running them through the RVQ codec — and reports an elapsed time.
//! Under the virtual clock the elapsed time comes from an affine
//! [`LatencyModel`]; under the wall clock it is the measured execution time
//! of the stand-in itself. Outputs depend only on inputs, configuration, and
//! seed, so virtual-clock runs are bit-reproducible.
//!
//! Stage state lives entirely inside each stage value (a run counter for
//! cold-start accounting); stages communicate only through their inputs and
//! outputs and are freely movable across threads.

mod asr;
mod embed;
mod llm;
mod tts;

pub use asr::{SynthAsr, Transcript};
pub use embed::{char_embed, char_embed_at, EMBED_FRAMES_PER_CHAR, EMBED_GAMMA_SHAPE};
pub use llm::{LlmReply, SynthLlm, TokenEvent};
pub use tts::{AudioChunk, Segment, SynthTts, TtsConfig, TtsOutput};

use serde::{Deserialize, Serialize};

/// Affine stage-cost model for virtual-clock runs.
///
/// A stage invocation costs `fixed_s + per_unit_s * units`, where the unit
/// is seconds of input audio for ASR, one token for the LLM, and one
/// frame-stage product for TTS. The first `warmup_runs` invocations add
/// `warmup_extra_s` on top, modeling cold starts; later runs are
/// steady-state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatencyModel {
    pub fixed_s: f64,
    pub per_unit_s: f64,
    pub warmup_runs: u32,
    pub warmup_extra_s: f64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self { fixed_s: 0.0, per_unit_s: 0.0, warmup_runs: 2, warmup_extra_s: 0.0 }
    }
}

impl LatencyModel {
    pub fn new(fixed_s: f64, per_unit_s: f64) -> Self {
        Self { fixed_s, per_unit_s, ..Default::default() }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0)
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.fixed_s < 0.0 || self.per_unit_s < 0.0 || self.warmup_extra_s < 0.0 {
            return Err(crate::Error::Config("latency model costs must be non-negative".into()));
        }
        Ok(())
    }

    /// Modeled cost of run number `run_index` (0-based) over `units` work.
    pub fn elapsed(&self, units: f64, run_index: u32) -> f64 {
        let warmup = if run_index < self.warmup_runs { self.warmup_extra_s } else { 0.0 };
        self.fixed_s + self.per_unit_s * units + warmup
    }
}

/// Time source for a stage run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockMode {
    /// Deterministic: elapsed times come from the latency models.
    Virtual,
    /// Honest: elapsed times are measured around the stand-in's real work.
    Wall,
}
