//! Waveform representation, 16-bit mono WAV I/O, and signal-construction
//! helpers used by tests, oracles, and the CLI.
//!
//! Samples are `f64` with a nominal range of [-1, 1]. Intermediate signals
//! (e.g. a speech+noise mixture) may exceed that range; values are clamped
//! only when encoding to PCM. Sample values map to 16-bit PCM symmetrically:
//! encode multiplies by 32768 and saturates to the i16 range, decode divides
//! by 32768, so one quantization pass is exact in both directions.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Default sample rate used throughout the crate.
pub const DEFAULT_SAMPLE_RATE: u32 = 24_000;

/// Peak amplitude targeted by the synthetic signal generators.
pub const GENERATOR_PEAK: f64 = 0.95;

const PCM_SCALE: f64 = 32_768.0;
const WAV_HEADER_LEN: usize = 44;

/// Mono PCM sample sequence with a sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl Waveform {
    /// Builds a waveform, rejecting non-finite samples and a zero rate.
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidSignal("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidSignal(format!("non-finite sample at index {i}")));
        }
        Ok(Self { samples, sample_rate_hz })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// Mean square amplitude.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()))
    }
}

/// Concatenates waveforms; all parts must share a sample rate.
pub fn concat(parts: &[&Waveform]) -> Result<Waveform> {
    let rate = match parts.first() {
        Some(p) => p.sample_rate_hz,
        None => return Err(Error::InvalidSignal("cannot concatenate zero waveforms".into())),
    };
    let mut samples = Vec::with_capacity(parts.iter().map(|p| p.len()).sum());
    for p in parts {
        if p.sample_rate_hz != rate {
            return Err(Error::InvalidSignal(format!(
                "sample rate mismatch: {} vs {}",
                p.sample_rate_hz, rate
            )));
        }
        samples.extend_from_slice(&p.samples);
    }
    Waveform::new(samples, rate)
}

fn read_u32_le(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn read_u16_le(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

/// Parses a RIFF/WAVE container holding 16-bit mono PCM.
///
/// Samples are scaled to [-1, 1] by dividing by 32768. Anything that is not
/// PCM(1), one channel, 16 bits per sample is rejected.
pub fn read_wav(bytes: &[u8]) -> Result<Waveform> {
    if bytes.len() < WAV_HEADER_LEN {
        return Err(Error::WavFormat("file shorter than a canonical WAV header".into()));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(Error::WavFormat("missing RIFF tag".into()));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(Error::WavFormat("missing WAVE tag".into()));
    }

    let mut pos = 12;
    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (format, channels, rate, bits)
    let mut data: Option<(usize, usize)> = None; // (offset, len)
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = read_u32_le(bytes, pos + 4) as usize;
        let body = pos + 8;
        if body + size > bytes.len() {
            return Err(Error::WavFormat(format!(
                "chunk '{}' overruns file",
                String::from_utf8_lossy(id)
            )));
        }
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(Error::WavFormat("fmt chunk truncated".into()));
                }
                fmt = Some((
                    read_u16_le(bytes, body),
                    read_u16_le(bytes, body + 2),
                    read_u32_le(bytes, body + 4),
                    read_u16_le(bytes, body + 14),
                ));
            }
            b"data" => {
                data = Some((body, size));
            }
            _ => {}
        }
        pos = body + size + (size & 1); // chunks are word-aligned
    }

    let (format, channels, rate, bits) =
        fmt.ok_or_else(|| Error::WavFormat("no fmt chunk".into()))?;
    let (data_at, data_len) = data.ok_or_else(|| Error::WavFormat("no data chunk".into()))?;
    if format != 1 {
        return Err(Error::UnsupportedWav(format!("format code {format}, want PCM(1)")));
    }
    if channels != 1 {
        return Err(Error::UnsupportedWav(format!("{channels} channels, want mono")));
    }
    if bits != 16 {
        return Err(Error::UnsupportedWav(format!("{bits} bits per sample, want 16")));
    }
    if data_len % 2 != 0 {
        return Err(Error::WavFormat("odd data chunk length for 16-bit samples".into()));
    }

    let samples = bytes[data_at..data_at + data_len]
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / PCM_SCALE)
        .collect();
    Waveform::new(samples, rate)
}

/// Encodes a waveform as 16-bit mono PCM with a canonical 44-byte header.
///
/// Amplitudes are clamped to [-1, 1]; +1.0 saturates to 32767.
pub fn write_wav(w: &Waveform) -> Result<Vec<u8>> {
    if w.is_empty() {
        return Err(Error::InvalidSignal("zero-length audio is not writable".into()));
    }
    let data_len = w.len() * 2;
    let mut out = Vec::with_capacity(WAV_HEADER_LEN + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&w.sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&(w.sample_rate_hz * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits per sample
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in w.samples() {
        let clamped = s.clamp(-1.0, 1.0);
        let scaled = (clamped * PCM_SCALE).round();
        let v = scaled.clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Mixes `noise` into `signal` at the requested SNR.
///
/// The noise is truncated to the signal length and scaled by `g` so that
/// `10*log10(P_signal / P_scaled_noise)` equals `target_snr_db`, with power
/// the mean square amplitude.
pub fn mix_at_snr(signal: &Waveform, noise: &Waveform, target_snr_db: f64) -> Result<Waveform> {
    if signal.sample_rate_hz != noise.sample_rate_hz {
        return Err(Error::InvalidSignal(format!(
            "sample rate mismatch: signal {} vs noise {}",
            signal.sample_rate_hz, noise.sample_rate_hz
        )));
    }
    if noise.len() < signal.len() {
        return Err(Error::InvalidSignal(format!(
            "noise shorter than signal: {} < {}",
            noise.len(),
            signal.len()
        )));
    }
    if !target_snr_db.is_finite() {
        return Err(Error::InvalidSignal("target SNR must be finite".into()));
    }
    let p_signal = signal.power();
    let noise_slice = &noise.samples[..signal.len()];
    let p_noise = noise_slice.iter().map(|s| s * s).sum::<f64>() / signal.len().max(1) as f64;
    if p_signal <= 0.0 {
        return Err(Error::InvalidSignal("signal has zero power".into()));
    }
    if p_noise <= 0.0 {
        return Err(Error::InvalidSignal("noise has zero power".into()));
    }
    let gain = (p_signal / (p_noise * 10f64.powf(target_snr_db / 10.0))).sqrt();
    let samples = signal
        .samples
        .iter()
        .zip(noise_slice)
        .map(|(s, n)| s + gain * n)
        .collect();
    Waveform::new(samples, signal.sample_rate_hz)
}

/// Deterministic speech-like test signal: magnitudes follow Gamma(shape, 1),
/// signs are equiprobable, and the result is peak-normalized to 0.95.
///
/// Per sample the generator draws the magnitude first and the sign second
/// from a single splitmix64 stream seeded with `seed`.
pub fn gen_gamma_signal(n: usize, shape: f64, seed: u64) -> Result<Waveform> {
    if n == 0 {
        return Err(Error::InvalidSignal("sample count must be positive".into()));
    }
    if shape.is_nan() || shape <= 0.0 {
        return Err(Error::InvalidSignal("gamma shape must be positive".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let mut samples = Vec::with_capacity(n);
    let mut peak = 0.0f64;
    for _ in 0..n {
        let magnitude = rng.next_gamma(shape);
        let sign = if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
        let s = sign * magnitude;
        peak = peak.max(s.abs());
        samples.push(s);
    }
    if peak > 0.0 {
        let scale = GENERATOR_PEAK / peak;
        for s in &mut samples {
            *s *= scale;
        }
    }
    Waveform::new(samples, DEFAULT_SAMPLE_RATE)
}

/// Deterministic white Gaussian noise with unit variance (unnormalized).
pub fn gen_white_noise(n: usize, seed: u64) -> Result<Waveform> {
    if n == 0 {
        return Err(Error::InvalidSignal("sample count must be positive".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let samples = (0..n).map(|_| rng.next_normal()).collect();
    Waveform::new(samples, DEFAULT_SAMPLE_RATE)
}

/// Pure sine tone.
pub fn gen_tone(freq_hz: f64, duration_s: f64, amplitude: f64, sample_rate_hz: u32) -> Waveform {
    let n = (duration_s * sample_rate_hz as f64).round() as usize;
    let samples = (0..n)
        .map(|i| amplitude * (2.0 * std::f64::consts::PI * freq_hz * i as f64 / sample_rate_hz as f64).sin())
        .collect();
    Waveform { samples, sample_rate_hz }
}

/// Digital silence.
pub fn gen_silence(duration_s: f64, sample_rate_hz: u32) -> Waveform {
    let n = (duration_s * sample_rate_hz as f64).round() as usize;
    Waveform { samples: vec![0.0; n], sample_rate_hz }
}
