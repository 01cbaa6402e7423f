//! End-to-end orchestrator: VAD endpoint -> ASR -> LLM -> TTS.
//!
//! Time zero is the VAD-detected end of speech. In one-shot mode the full
//! LLM reply is handed to the TTS as one segment; in streaming mode every
//! `flush_every_tokens` tokens are forwarded as soon as they exist, and the
//! TTS generates chunks while the LLM keeps emitting. The virtual clock
//! resolves each completion as `max(dependencies) + modeled cost` with no
//! sleeping, so runs are bit-reproducible; wall mode runs the same
//! orchestration and stamps real times around the stages' actual work.
//!
//! Profile semantics: `asr_s` is the transcription time, `llm_s` the time
//! from LLM start to its first flush (one-shot: the full generation), and
//! `tts_s` the time from first flush to the first audio chunk. With those
//! definitions `total_s = asr_s + llm_s + tts_s` holds in both modes and
//! equals the latency from end of speech to first audio.

use crate::endpoint::{extract_speech, find_endpoint, label_frames, EndpointConfig};
use crate::error::{Error, Result};
use crate::latency::{ChunkEvent, StreamTrace};
use crate::rng::{hash_fold, SplitMix64};
use crate::rvq::{train_codebooks, CodebookSet, RvqConfig};
use crate::signal::Waveform;
use crate::stages::{
    AudioChunk, ClockMode, LatencyModel, LlmReply, Segment, SynthAsr, SynthLlm, SynthTts,
    TtsConfig, EMBED_FRAMES_PER_CHAR, EMBED_GAMMA_SHAPE,
};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Oneshot,
    Streaming,
}

/// Per-stage affine cost models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct StageModels {
    pub asr: LatencyModel,
    pub llm: LatencyModel,
    pub tts: LatencyModel,
}

/// Codebook training parameters for on-the-fly codecs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodecConfig {
    pub n_stages: usize,
    pub codebook_size: usize,
    pub dim: usize,
    pub train_frames: usize,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self { n_stages: 32, codebook_size: 64, dim: 16, train_frames: 2048 }
    }
}

/// Full pipeline configuration. Every field has a default; unknown fields
/// are rejected so config typos fail loudly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub flush_every_tokens: usize,
    pub clock: ClockMode,
    pub seed: u64,
    /// Prior-dialog payload threaded to the stages (opaque).
    pub context: String,
    /// Fixed reply length in tokens; `None` derives it from the input.
    pub llm_tokens: Option<usize>,
    pub rvq: RvqConfig,
    pub codec: CodecConfig,
    pub endpoint: EndpointConfig,
    pub models: StageModels,
    /// Frames per TTS chunk (default about 1.5 s of audio).
    pub chunk_frames: usize,
    pub frames_per_char: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Streaming,
            flush_every_tokens: 10,
            clock: ClockMode::Virtual,
            seed: 42,
            context: String::new(),
            llm_tokens: None,
            rvq: RvqConfig::truncated(16),
            codec: CodecConfig::default(),
            endpoint: EndpointConfig::default(),
            models: StageModels {
                asr: LatencyModel::new(0.3, 0.1),
                llm: LatencyModel::new(0.05, 0.015),
                tts: LatencyModel::new(0.02, 2e-5),
            },
            chunk_frames: 2250,
            frames_per_char: EMBED_FRAMES_PER_CHAR,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.flush_every_tokens == 0 {
            return Err(Error::Config("flush_every_tokens must be at least 1".into()));
        }
        if self.chunk_frames == 0 {
            return Err(Error::Config("chunk_frames must be positive".into()));
        }
        if self.frames_per_char == 0 {
            return Err(Error::Config("frames_per_char must be positive".into()));
        }
        self.rvq.validate()?;
        self.endpoint.validate()?;
        self.models.asr.validate()?;
        self.models.llm.validate()?;
        self.models.tts.validate()?;
        if self.codec.dim == 0 || self.codec.n_stages == 0 {
            return Err(Error::Config("codec dim and n_stages must be positive".into()));
        }
        if self.rvq.decoder_codebooks > self.codec.n_stages {
            return Err(Error::Config(format!(
                "decoder_codebooks {} exceeds codec n_stages {}",
                self.rvq.decoder_codebooks, self.codec.n_stages
            )));
        }
        Ok(())
    }

    /// Parses a JSON config document; errors carry the offending field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let deserializer = &mut serde_json::Deserializer::from_str(text);
        let cfg: PipelineConfig = serde_path_to_error::deserialize(deserializer)
            .map_err(|e| Error::Config(format!("at '{}': {}", e.path(), e.inner())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn tts_config(&self) -> TtsConfig {
        TtsConfig {
            rvq: self.rvq,
            chunk_frames: self.chunk_frames,
            dim: self.codec.dim,
            frames_per_char: self.frames_per_char,
            sample_rate_hz: crate::signal::DEFAULT_SAMPLE_RATE,
            seed: hash_fold(self.seed, 2),
        }
    }
}

/// Per-stage and total latency, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeProfile {
    pub asr_s: f64,
    pub llm_s: f64,
    pub tts_s: f64,
    pub total_s: f64,
}

/// Pure arithmetic composition of a measured profile.
///
/// In one-shot mode `llm_s` is the full generation time; in streaming mode
/// it is the time to the first flush. Either way the first audio chunk lands
/// at `asr_s + llm_s + tts_s`.
pub fn replay_profile(asr_s: f64, llm_s: f64, tts_s: f64, _mode: Mode) -> Result<TimeProfile> {
    for (name, v) in [("asr_s", asr_s), ("llm_s", llm_s), ("tts_s", tts_s)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Metrics(format!("{name} must be non-negative, got {v}")));
        }
    }
    Ok(TimeProfile { asr_s, llm_s, tts_s, total_s: asr_s + llm_s + tts_s })
}

/// Everything a pipeline run produced.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub profile: TimeProfile,
    /// Chunk arrivals relative to the end of input speech.
    pub trace: StreamTrace,
    pub chunks: Vec<AudioChunk>,
    /// Unquantized TTS frames, for reference-based SNR.
    pub reference_frames: Vec<Vec<f64>>,
    pub segments: Vec<Segment>,
    pub transcript: String,
    pub response_text: String,
    sample_rate_hz: u32,
}

impl PipelineRun {
    pub fn audio(&self) -> Result<Waveform> {
        let parts: Vec<&Waveform> = self.chunks.iter().map(|c| &c.waveform).collect();
        crate::signal::concat(&parts)
    }

    pub fn reference_audio(&self) -> Result<Waveform> {
        Waveform::new(
            self.reference_frames.iter().flatten().copied().collect(),
            self.sample_rate_hz,
        )
    }
}

/// Trains codebooks for the configured codec, seeded from the pipeline seed.
///
/// Training frames are drawn from the same speech-like component
/// distribution the character embedding uses, so any text is in
/// distribution for the codec.
pub fn build_codebooks(cfg: &PipelineConfig) -> Result<Arc<CodebookSet>> {
    let mut rng = SplitMix64::new(hash_fold(cfg.seed, 3));
    let frames: Vec<Vec<f64>> = (0..cfg.codec.train_frames)
        .map(|_| {
            (0..cfg.codec.dim)
                .map(|_| {
                    let magnitude = (rng.next_gamma(EMBED_GAMMA_SHAPE) / 6.0).min(1.0);
                    if rng.next_u64() & 1 == 0 {
                        magnitude
                    } else {
                        -magnitude
                    }
                })
                .collect()
        })
        .collect();
    Ok(Arc::new(train_codebooks(
        &frames,
        cfg.codec.n_stages,
        cfg.codec.codebook_size,
        hash_fold(cfg.seed, 3),
    )?))
}

/// Runs the full pipeline, training codebooks on the fly.
pub fn run_pipeline(input: &Waveform, cfg: &PipelineConfig) -> Result<PipelineRun> {
    let codebooks = build_codebooks(cfg)?;
    run_pipeline_with_codebooks(input, cfg, codebooks)
}

/// Runs the full pipeline against pre-trained codebooks.
pub fn run_pipeline_with_codebooks(
    input: &Waveform,
    cfg: &PipelineConfig,
    codebooks: Arc<CodebookSet>,
) -> Result<PipelineRun> {
    cfg.validate()?;
    let clock = cfg.clock;

    // Voice activity gate. Time zero is the detected end of speech; if the
    // stream ends while speech is still running, end-of-input ends the
    // utterance.
    let labels = label_frames(input, &cfg.endpoint).map_err(|e| Error::in_stage("vad", e))?;
    let _endpoint_s = find_endpoint(&labels, &cfg.endpoint);
    let speech = extract_speech(input, &cfg.endpoint)?;

    let wall_origin = Instant::now();

    // ASR consumes the gated speech.
    let mut asr = SynthAsr::new(cfg.models.asr);
    let transcript = asr.run(&speech, clock);
    let asr_done_s = match clock {
        ClockMode::Virtual => transcript.elapsed_s,
        ClockMode::Wall => wall_origin.elapsed().as_secs_f64(),
    };

    // LLM reply, one-shot or streaming.
    let mut llm = SynthLlm::new(cfg.models.llm, hash_fold(cfg.seed, 1));
    llm.token_override = cfg.llm_tokens;
    let streaming = cfg.mode == Mode::Streaming;
    let llm_start_s = asr_done_s;
    let reply = llm.run(&transcript.text, &cfg.context, streaming, clock);
    if reply.tokens.is_empty() {
        return Err(Error::Stage { stage: "llm", message: "empty reply".into() });
    }
    let segments = flush_segments(&reply, cfg.flush_every_tokens, cfg.mode, llm_start_s);

    // TTS renders the segment stream.
    let mut tts = SynthTts::new(cfg.models.tts, cfg.tts_config(), codebooks)
        .map_err(|e| Error::in_stage("tts", e))?;
    let tts_wall_start = wall_origin.elapsed().as_secs_f64();
    let output = tts.run(&segments, clock).map_err(|e| Error::in_stage("tts", e))?;

    // Wall mode stamps are stage-relative; shift them onto the pipeline
    // timeline. Virtual completions already live on it.
    let offset = match clock {
        ClockMode::Virtual => 0.0,
        ClockMode::Wall => tts_wall_start,
    };
    let mut chunks = output.chunks;
    let events: Vec<ChunkEvent> = output
        .trace
        .events()
        .iter()
        .map(|e| ChunkEvent { arrival_s: e.arrival_s + offset, audio_duration_s: e.audio_duration_s })
        .collect();
    for c in &mut chunks {
        c.completion_s += offset;
    }
    let trace = StreamTrace::new(events, output.trace.generation_end_s() + offset)?;

    let first_chunk_s = chunks[0].completion_s;
    let first_flush_s = segments[0].available_s;
    let profile = TimeProfile {
        asr_s: asr_done_s,
        llm_s: first_flush_s - llm_start_s,
        tts_s: first_chunk_s - first_flush_s,
        total_s: first_chunk_s,
    };

    Ok(PipelineRun {
        profile,
        trace,
        chunks,
        reference_frames: output.reference_frames,
        segments,
        transcript: transcript.text,
        response_text: reply.full_text,
        sample_rate_hz: crate::signal::DEFAULT_SAMPLE_RATE,
    })
}

/// Runs both modes with identical seeds and models.
pub fn compare_modes(input: &Waveform, cfg: &PipelineConfig) -> Result<(PipelineRun, PipelineRun)> {
    let codebooks = build_codebooks(cfg)?;
    let mut oneshot_cfg = cfg.clone();
    oneshot_cfg.mode = Mode::Oneshot;
    let mut streaming_cfg = cfg.clone();
    streaming_cfg.mode = Mode::Streaming;
    let oneshot = run_pipeline_with_codebooks(input, &oneshot_cfg, codebooks.clone())?;
    let streaming = run_pipeline_with_codebooks(input, &streaming_cfg, codebooks)?;
    Ok((oneshot, streaming))
}

/// Splits the reply into TTS segments.
///
/// Segment k covers the character span of its tokens in the full reply text,
/// including the separator joining it to the next segment, so the segments
/// tile the utterance exactly and one-shot versus streaming renders
/// identical audio. Availability is the emission time of the segment's last
/// token, shifted onto the pipeline timeline.
fn flush_segments(reply: &LlmReply, flush_every: usize, mode: Mode, llm_start_s: f64) -> Vec<Segment> {
    let n = reply.tokens.len();
    // Char offset of each token in full_text (tokens joined by one space).
    let mut token_char_starts = Vec::with_capacity(n);
    let mut pos = 0usize;
    for t in &reply.tokens {
        token_char_starts.push(pos);
        pos += t.token.chars().count() + 1;
    }
    let total_chars = reply.full_text.chars().count();
    // Byte offset per char index, for slicing.
    let byte_at: Vec<usize> = reply
        .full_text
        .char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(reply.full_text.len()))
        .collect();

    let group_size = match mode {
        Mode::Oneshot => n,
        Mode::Streaming => flush_every,
    };
    let mut segments = Vec::new();
    let mut start_token = 0usize;
    while start_token < n {
        let end_token = (start_token + group_size).min(n);
        let char_start = token_char_starts[start_token];
        let char_end = if end_token < n { token_char_starts[end_token] } else { total_chars };
        let available_s = llm_start_s + reply.tokens[end_token - 1].available_s;
        segments.push(Segment {
            text: reply.full_text[byte_at[char_start]..byte_at[char_end]].to_string(),
            char_offset: char_start,
            available_s,
        });
        start_token = end_token;
    }
    segments
}
