//! Language-model stand-in: a templated reply with per-token availability
//! times, supporting one-shot and streaming emission.

use super::{ClockMode, LatencyModel};
use crate::rng::{hash_fold, SplitMix64};
use std::time::Instant;

/// Templated reply bank. Replies are picked by input hash; when a token
/// count override is set, words are drawn cyclically to the exact count.
const REPLY_BANK: [&str; 6] = [
    "certainly the forecast for this afternoon shows scattered showers so carrying a small \
     umbrella would be a sensible idea before you head out",
    "thanks for asking the system is running normally and there is nothing that needs your \
     attention right now so you can continue with your day",
    "based on what you described the quickest option is to restart the device wait a few \
     seconds and then try the same request once more",
    "here is a short summary the meeting moved to three pm the report is due on friday and \
     the client confirmed they will join remotely",
    "i can help with that first open the settings panel then choose the audio tab and raise \
     the input level until the meter responds",
    "good question the difference is mostly about latency one option answers faster while \
     the other produces noticeably smoother speech output",
];

/// One emitted token and the moment it became available, seconds after the
/// stage started.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenEvent {
    pub token: String,
    pub available_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmReply {
    pub tokens: Vec<TokenEvent>,
    /// Tokens joined with single spaces; the text the TTS renders.
    pub full_text: String,
    /// Time the last token became available.
    pub completion_s: f64,
}

#[derive(Debug, Clone)]
pub struct SynthLlm {
    model: LatencyModel,
    seed: u64,
    /// Exact reply length in tokens; `None` picks a template's natural length.
    pub token_override: Option<usize>,
    runs: u32,
}

impl SynthLlm {
    pub fn new(model: LatencyModel, seed: u64) -> Self {
        Self { model, seed, token_override: None, runs: 0 }
    }

    /// Generates the reply to `prompt` given the dialog `context`.
    ///
    /// Streaming makes token k (1-based) available at
    /// `fixed_s + per_unit_s * k`; one-shot makes every token available at
    /// completion, `fixed_s + per_unit_s * n`. Warmup extras shift the whole
    /// emission. Under the wall clock each token is stamped as it is
    /// produced.
    pub fn run(&mut self, prompt: &str, context: &str, streaming: bool, clock: ClockMode) -> LlmReply {
        let started = Instant::now();
        let words = self.reply_words(prompt, context);
        let n = words.len();
        let mut tokens = Vec::with_capacity(n);
        match clock {
            ClockMode::Virtual => {
                let completion = self.model.elapsed(n as f64, self.runs);
                for (k, word) in words.iter().enumerate() {
                    let available_s = if streaming {
                        self.model.elapsed((k + 1) as f64, self.runs)
                    } else {
                        completion
                    };
                    tokens.push(TokenEvent { token: word.to_string(), available_s });
                }
            }
            ClockMode::Wall => {
                for word in &words {
                    tokens.push(TokenEvent {
                        token: word.to_string(),
                        available_s: started.elapsed().as_secs_f64(),
                    });
                }
            }
        }
        self.runs += 1;
        let completion_s = tokens.last().map(|t| t.available_s).unwrap_or(0.0);
        LlmReply { full_text: words.join(" "), tokens, completion_s }
    }

    fn reply_words(&self, prompt: &str, context: &str) -> Vec<&'static str> {
        let mut h = hash_fold(self.seed, 0x11AA);
        for b in prompt.bytes() {
            h = hash_fold(h, b as u64);
        }
        for b in context.bytes() {
            h = hash_fold(h, b as u64);
        }
        let mut rng = SplitMix64::new(h);
        let template: Vec<&'static str> =
            REPLY_BANK[rng.next_index(REPLY_BANK.len())].split_whitespace().collect();
        match self.token_override {
            None => template,
            Some(n) => (0..n).map(|i| template[i % template.len()]).collect(),
        }
    }
}
