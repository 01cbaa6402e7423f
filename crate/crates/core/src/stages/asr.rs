//! Speech-recognition stand-in: a deterministic pseudo-transcript derived
//! from a content hash of the samples, with model-driven timing.

use super::{ClockMode, LatencyModel};
use crate::rng::{hash_fold, SplitMix64};
use crate::signal::Waveform;
use std::time::Instant;

/// Fixed vocabulary the pseudo-transcript is drawn from.
const WORD_BANK: [&str; 32] = [
    "please", "tell", "me", "about", "the", "weather", "today", "and", "whether", "i", "should",
    "bring", "an", "umbrella", "to", "work", "this", "morning", "because", "forecast", "looked",
    "uncertain", "when", "checked", "it", "earlier", "on", "my", "phone", "before", "leaving",
    "home",
];

/// Words emitted per second of input audio.
const WORDS_PER_SECOND: f64 = 2.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub text: String,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone)]
pub struct SynthAsr {
    model: LatencyModel,
    runs: u32,
}

impl SynthAsr {
    pub fn new(model: LatencyModel) -> Self {
        Self { model, runs: 0 }
    }

    pub fn runs(&self) -> u32 {
        self.runs
    }

    /// Transcribes one utterance. The unit for the latency model is seconds
    /// of input audio.
    pub fn run(&mut self, speech: &Waveform, clock: ClockMode) -> Transcript {
        let started = Instant::now();
        let text = pseudo_transcript(speech);
        let elapsed_s = match clock {
            ClockMode::Virtual => self.model.elapsed(speech.duration_s(), self.runs),
            ClockMode::Wall => started.elapsed().as_secs_f64(),
        };
        self.runs += 1;
        Transcript { text, elapsed_s }
    }
}

fn pseudo_transcript(speech: &Waveform) -> String {
    let mut h = hash_fold(0x5EED_A5E1, speech.len() as u64);
    for &s in speech.samples() {
        h = hash_fold(h, s.to_bits());
    }
    let n_words = ((speech.duration_s() * WORDS_PER_SECOND).round() as usize).max(1);
    let mut rng = SplitMix64::new(h);
    let words: Vec<&str> =
        (0..n_words).map(|_| WORD_BANK[rng.next_index(WORD_BANK.len())]).collect();
    words.join(" ")
}
