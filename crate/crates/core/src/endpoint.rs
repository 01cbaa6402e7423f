//! Energy-based voice activity labeling and end-of-speech detection.
//!
//! Frames are non-overlapping windows of `frame_ms`. Each frame's RMS energy
//! in dBFS is compared against a noise-floor estimate (taken from the
//! leading frames and clamped into a sane range) plus a threshold. End of
//! speech fires once a full `silence_window_s` of consecutive silence frames
//! follows speech; the reported endpoint is the end of the last speech frame
//! plus the window, so downstream timing can treat work finished inside the
//! window as free.

use crate::error::{Error, Result};
use crate::signal::Waveform;
use serde::{Deserialize, Serialize};

/// Noise-floor clamp range, dBFS. The lower bound keeps digital silence from
/// producing a -inf floor; the upper bound keeps speech-only leads (no quiet
/// preamble to measure) from masking everything.
pub const NOISE_FLOOR_MIN_DB: f64 = -80.0;
pub const NOISE_FLOOR_MAX_DB: f64 = -30.0;

const ENERGY_EPSILON: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EndpointConfig {
    /// Frame length in milliseconds.
    pub frame_ms: u32,
    /// Speech threshold above the noise-floor estimate, dB.
    pub energy_threshold_db: f64,
    /// Silence run length that ends an utterance, seconds.
    pub silence_window_s: f64,
    /// Leading frames used to estimate the noise floor.
    pub noise_floor_frames: usize,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            frame_ms: 30,
            energy_threshold_db: 10.0,
            silence_window_s: 1.5,
            noise_floor_frames: 10,
        }
    }
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frame_ms == 0 {
            return Err(Error::Endpoint("frame_ms must be positive".into()));
        }
        if self.silence_window_s.is_nan() || self.silence_window_s <= 0.0 {
            return Err(Error::Endpoint("silence_window_s must be positive".into()));
        }
        if self.noise_floor_frames == 0 {
            return Err(Error::Endpoint("noise_floor_frames must be at least 1".into()));
        }
        Ok(())
    }

    pub fn frame_s(&self) -> f64 {
        self.frame_ms as f64 / 1000.0
    }

    fn frame_len(&self, sample_rate_hz: u32) -> usize {
        (sample_rate_hz as u64 * self.frame_ms as u64 / 1000) as usize
    }

    /// Consecutive silence frames that complete the window.
    pub fn window_frames(&self) -> usize {
        (self.silence_window_s / self.frame_s()).ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameLabel {
    Speech,
    Silence,
}

fn frame_energy_db(frame: &[f64]) -> f64 {
    let mean_square = frame.iter().map(|s| s * s).sum::<f64>() / frame.len() as f64;
    10.0 * mean_square.max(ENERGY_EPSILON).log10()
}

/// Labels every complete frame as speech or silence.
pub fn label_frames(w: &Waveform, cfg: &EndpointConfig) -> Result<Vec<FrameLabel>> {
    cfg.validate()?;
    let frame_len = cfg.frame_len(w.sample_rate_hz());
    if frame_len == 0 {
        return Err(Error::Endpoint("frame shorter than one sample at this rate".into()));
    }
    if w.len() < frame_len {
        return Err(Error::Endpoint(format!(
            "waveform shorter than one frame ({} < {frame_len} samples)",
            w.len()
        )));
    }
    let energies: Vec<f64> =
        w.samples().chunks_exact(frame_len).map(frame_energy_db).collect();
    let lead = cfg.noise_floor_frames.min(energies.len());
    let floor = (energies[..lead].iter().sum::<f64>() / lead as f64)
        .clamp(NOISE_FLOOR_MIN_DB, NOISE_FLOOR_MAX_DB);
    let threshold = floor + cfg.energy_threshold_db;
    Ok(energies
        .iter()
        .map(|&e| if e > threshold { FrameLabel::Speech } else { FrameLabel::Silence })
        .collect())
}

/// End-of-speech time, if a full silence window follows speech.
///
/// Returns `end of last speech frame + silence_window_s` as soon as
/// `window_frames` consecutive silence frames follow a speech frame; `None`
/// when the labels contain no speech or the window never completes.
pub fn find_endpoint(labels: &[FrameLabel], cfg: &EndpointConfig) -> Option<f64> {
    let window = cfg.window_frames();
    let frame_s = cfg.frame_s();
    let mut last_speech: Option<usize> = None;
    let mut silence_run = 0usize;
    for (i, label) in labels.iter().enumerate() {
        match label {
            FrameLabel::Speech => {
                last_speech = Some(i);
                silence_run = 0;
            }
            FrameLabel::Silence => {
                silence_run += 1;
                if silence_run >= window {
                    if let Some(s) = last_speech {
                        return Some((s + 1) as f64 * frame_s + cfg.silence_window_s);
                    }
                }
            }
        }
    }
    None
}

/// Concatenation of the speech-labeled frames.
///
/// The trailing partial frame (if any) is dropped with the silence. Errors
/// when no speech is detected.
pub fn extract_speech(w: &Waveform, cfg: &EndpointConfig) -> Result<Waveform> {
    let labels = label_frames(w, cfg)?;
    let frame_len = cfg.frame_len(w.sample_rate_hz());
    let mut samples = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        if *label == FrameLabel::Speech {
            samples.extend_from_slice(&w.samples()[i * frame_len..(i + 1) * frame_len]);
        }
    }
    if samples.is_empty() {
        return Err(Error::NoSpeech);
    }
    Waveform::new(samples, w.sample_rate_hz())
}
