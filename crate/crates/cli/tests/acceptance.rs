//! Acceptance suite: one test per criterion, each printing a PASS line
//! (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! The criteria pin the arithmetic identities, monotone trends, and
//! determinism guarantees the crate is built around, at fixed tolerances.

use std::process::Command;
use std::sync::{Arc, OnceLock};
use std::time::Instant;
use voicelab::latency::{first_chunk_latency_ms, inter_chunk_stats_ms, rtf, underrun_report, ChunkEvent, StreamTrace};
use voicelab::pipeline::{
    build_codebooks, compare_modes, replay_profile, run_pipeline_with_codebooks, Mode,
    PipelineConfig, StageModels,
};
use voicelab::quality::{reference_snr, wada_snr};
use voicelab::rng::{hash_fold, SplitMix64};
use voicelab::rvq::{encode_frame, pad_indices, CodebookSet, Padding, RvqConfig};
use voicelab::signal::{concat, gen_gamma_signal, gen_silence, gen_tone, gen_white_noise, mix_at_snr, Waveform};
use voicelab::stages::{char_embed, ClockMode, LatencyModel, Segment, SynthTts, TtsConfig};
use voicelab::Error;

const RATE: u32 = 24_000;

/// The default codec (32 stages, K=64, D=16, fixed seed), trained once.
fn default_codebooks() -> Arc<CodebookSet> {
    static CB: OnceLock<Arc<CodebookSet>> = OnceLock::new();
    CB.get_or_init(|| build_codebooks(&PipelineConfig::default()).expect("codec trains"))
        .clone()
}

fn speech_input() -> Waveform {
    let lead = gen_silence(0.33, RATE);
    let tone = gen_tone(440.0, 1.5, 0.5, RATE);
    let tail = gen_silence(2.0, RATE);
    concat(&[&lead, &tone, &tail]).unwrap()
}

fn render(frames: &[Vec<f64>]) -> Waveform {
    Waveform::new(frames.iter().flatten().copied().collect(), RATE).unwrap()
}

#[test]
fn criterion_01_time_profile_arithmetic_replay() {
    let started = Instant::now();
    let columns = [
        // (asr_s, llm_s, tts_s, mode, expected total)
        (0.5056, 2.1502, 0.6695, Mode::Oneshot, 3.3253),
        (0.4986, 0.1504, 0.6345, Mode::Streaming, 1.2835),
        (2.4502, 1.3272, 1.6299, Mode::Oneshot, 5.4073),
        (2.2245, 0.1496, 1.4647, Mode::Streaming, 3.8388),
    ];
    for (asr, llm, tts, mode, expected) in columns {
        let profile = replay_profile(asr, llm, tts, mode).unwrap();
        assert!(
            (profile.total_s - expected).abs() < 1e-9,
            "replay {asr}+{llm}+{tts} gave {} instead of {expected}",
            profile.total_s
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "replay took {elapsed:?}");
    println!("ACCEPTANCE 1 time-profile arithmetic replay (4 columns, 1e-9): PASS");
}

#[test]
fn criterion_02_streaming_dominance() {
    let started = Instant::now();
    let input = speech_input();
    let mut rng = SplitMix64::new(0xD011A);
    let runs = 100;
    for i in 0..runs {
        let n_tokens = 11 + rng.next_index(110);
        let cfg = PipelineConfig {
            seed: rng.next_u64(),
            llm_tokens: Some(n_tokens),
            flush_every_tokens: 10,
            // Tiny codec so each of the hundred runs is cheap.
            codec: voicelab::pipeline::CodecConfig {
                n_stages: 4,
                codebook_size: 8,
                dim: 4,
                train_frames: 64,
            },
            rvq: RvqConfig::truncated(2 + rng.next_index(3)),
            // First ten tokens span at least 19 characters (38 frames), so
            // any chunk size up to 30 keeps the first chunk inside the
            // first flush.
            chunk_frames: 1 + rng.next_index(30),
            models: StageModels {
                asr: LatencyModel::new(rng.next_f64() * 0.5, rng.next_f64() * 0.2),
                llm: LatencyModel::new(rng.next_f64() * 0.2, 1e-3 + rng.next_f64() * 0.05),
                tts: LatencyModel::new(rng.next_f64() * 0.05, rng.next_f64() * 1e-4),
            },
            ..Default::default()
        };
        let (oneshot, streaming) = compare_modes(&input, &cfg).unwrap();
        assert!(
            streaming.profile.total_s < oneshot.profile.total_s,
            "run {i}: streaming {} not strictly below one-shot {} (n_tokens {n_tokens})",
            streaming.profile.total_s,
            oneshot.profile.total_s
        );
    }
    // Degenerate case: replies at or below the flush size tie exactly.
    for n_tokens in [1usize, 5, 10] {
        let cfg = PipelineConfig {
            llm_tokens: Some(n_tokens),
            codec: voicelab::pipeline::CodecConfig {
                n_stages: 4,
                codebook_size: 8,
                dim: 4,
                train_frames: 64,
            },
            rvq: RvqConfig::truncated(4),
            chunk_frames: 8,
            ..Default::default()
        };
        let (oneshot, streaming) = compare_modes(&input, &cfg).unwrap();
        assert_eq!(oneshot.profile.total_s, streaming.profile.total_s);
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "dominance sweep took {elapsed:?}");
    println!("ACCEPTANCE 2 streaming dominance ({runs} randomized configs, 100% strict): PASS");
}

#[test]
fn criterion_03_rvq_quality_monotonicity() {
    let started = Instant::now();
    let cb = default_codebooks();
    let embed_seed = hash_fold(42, 2);
    let mut rng = SplitMix64::new(0x53ED);
    let mut texts = Vec::new();
    const CHARS: &[u8] = b"abcdefghijklmnopqrstuvwxyz    ,.";
    for _ in 0..20 {
        let len = 80 + rng.next_index(220);
        let text: String = (0..len).map(|_| CHARS[rng.next_index(CHARS.len())] as char).collect();
        texts.push(text);
    }
    let mut inversions = 0;
    for text in &texts {
        let frames = char_embed(text, 16, embed_seed);
        let reference = render(&frames);
        let mut last = f64::NEG_INFINITY;
        for q in [16usize, 20, 24, 32] {
            let code = voicelab::rvq::encode(&frames, &cb, &RvqConfig::truncated(q)).unwrap();
            let decoded = voicelab::rvq::decode(&code, &cb).unwrap();
            let snr = reference_snr(&reference, &render(&decoded)).unwrap();
            if snr < last {
                inversions += 1;
            }
            last = snr;
        }
    }
    assert_eq!(inversions, 0, "quality not monotone in q");
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "quality sweep took {elapsed:?}");
    println!("ACCEPTANCE 3 RVQ quality monotone in q (20 texts, 0 inversions): PASS");
}

#[test]
fn criterion_04_rvq_latency_monotonicity() {
    let started = Instant::now();
    let cb = default_codebooks();
    let input = speech_input();
    let mut last = f64::NEG_INFINITY;
    for q in [16usize, 20, 24, 32] {
        let cfg = PipelineConfig {
            rvq: RvqConfig::truncated(q),
            llm_tokens: Some(40),
            ..Default::default()
        };
        let run = run_pipeline_with_codebooks(&input, &cfg, cb.clone()).unwrap();
        let latency = first_chunk_latency_ms(&run.trace).unwrap();
        assert!(latency > last, "q={q}: first-chunk latency {latency} not above {last}");
        last = latency;
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "latency sweep took {elapsed:?}");
    println!("ACCEPTANCE 4 first-chunk latency strictly increasing in q: PASS");
}

#[test]
fn criterion_05_padding_correctness() {
    assert_eq!(
        pad_indices(&[3, 5, 7, 9], 8, Padding::Mean, 64).unwrap(),
        vec![3, 5, 7, 9, 6, 6, 6, 6]
    );
    assert_eq!(pad_indices(&[3, 5], 5, Padding::Concat, 64).unwrap(), vec![3, 5, 3, 5, 3]);
    let mut rng = SplitMix64::new(0x9AD5);
    for _ in 0..1000 {
        let len = 1 + rng.next_index(32);
        let code: Vec<u32> = (0..len).map(|_| rng.next_index(64) as u32).collect();
        for strategy in [Padding::Mean, Padding::Concat] {
            assert_eq!(pad_indices(&code, code.len(), strategy, 64).unwrap(), code);
        }
    }
    println!("ACCEPTANCE 5 padding golden cases + identity over 1000 codes: PASS");
}

#[test]
fn criterion_06_brute_force_codec_equivalence() {
    // Independent oracle: exhaustive per-stage scan, explicit comparisons.
    fn oracle(frame: &[f64], cb: &CodebookSet, q: usize) -> Vec<u32> {
        let mut residual = frame.to_vec();
        let mut out = Vec::new();
        for s in 0..q {
            let mut best_k = 0usize;
            let mut best_d = f64::INFINITY;
            for k in 0..cb.codebook_size() {
                let entry = &cb.stage(s)[k];
                let mut d = 0.0;
                for (a, b) in residual.iter().zip(entry) {
                    d += (a - b) * (a - b);
                }
                if d < best_d {
                    best_d = d;
                    best_k = k;
                }
            }
            for (r, c) in residual.iter_mut().zip(&cb.stage(s)[best_k]) {
                *r -= c;
            }
            out.push(best_k as u32);
        }
        out
    }

    let mut rng = SplitMix64::new(0xB4);
    let mut checked = 0usize;
    while checked < 1000 {
        let k = 2 + rng.next_index(7); // K <= 8
        let d = 1 + rng.next_index(4); // D <= 4
        let q = 1 + rng.next_index(4); // q <= 4
        let stages: Vec<Vec<Vec<f64>>> = (0..q)
            .map(|_| {
                (0..k).map(|_| (0..d).map(|_| 2.0 * rng.next_f64() - 1.0).collect()).collect()
            })
            .collect();
        let cb = CodebookSet::new(stages).unwrap();
        for _ in 0..10 {
            let frame: Vec<f64> = (0..d).map(|_| 2.0 * rng.next_f64() - 1.0).collect();
            let got = encode_frame(&frame, &cb, q).unwrap();
            let want = oracle(&frame, &cb, q);
            assert_eq!(got, want, "K={k} D={d} q={q}");
            checked += 1;
        }
    }
    println!("ACCEPTANCE 6 brute-force equivalence over {checked} frames: PASS");
}

#[test]
fn criterion_07_wada_snr_recovery() {
    let started = Instant::now();
    let points = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0];
    let mut inversions = 0usize;
    for seed in 0..10u64 {
        let speech = gen_gamma_signal(120_000, 0.4, hash_fold(seed, 1)).unwrap();
        let noise = gen_white_noise(120_000, hash_fold(seed, 2)).unwrap();
        let mut last = f64::NEG_INFINITY;
        for &true_snr in &points {
            let mixed = mix_at_snr(&speech, &noise, true_snr).unwrap();
            let estimate = wada_snr(&mixed).unwrap();
            assert!(
                (estimate - true_snr).abs() <= 3.0,
                "seed {seed}: {estimate:.2} dB estimated at true {true_snr} dB"
            );
            if estimate < last {
                inversions += 1;
            }
            last = estimate;
        }
    }
    assert!(inversions <= 1, "{inversions} inversions across 10 seeds");
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 20.0, "recovery sweep took {elapsed:?}");
    println!("ACCEPTANCE 7 blind SNR within ±3 dB at 7 points x 10 seeds ({inversions} inversions): PASS");
}

#[test]
fn criterion_08_underrun_theorem() {
    let mut rng = SplitMix64::new(0x0DD5);
    for case in 0..1000 {
        let n = 2 + rng.next_index(30);
        let durations: Vec<f64> = (0..n).map(|_| 0.3 + rng.next_f64() * 1.7).collect();
        let min_duration = durations.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut arrival = rng.next_f64() * 2.0;
        let mut events = Vec::new();
        for (i, &d) in durations.iter().enumerate() {
            if i > 0 {
                // Every gap strictly below the smallest chunk duration.
                arrival += rng.next_f64() * 0.999 * min_duration;
            }
            events.push(ChunkEvent { arrival_s: arrival, audio_duration_s: d });
        }
        let trace = StreamTrace::new(events, arrival).unwrap();
        let (_, _, max_gap_ms) = inter_chunk_stats_ms(&trace).unwrap();
        assert!(max_gap_ms / 1000.0 < min_duration, "case {case} violates the premise");
        let underruns = underrun_report(&trace).unwrap();
        assert!(underruns.is_empty(), "case {case}: unexpected underruns {underruns:?}");
    }
    // The detector itself is live: a late chunk is flagged.
    let late = StreamTrace::new(
        vec![
            ChunkEvent { arrival_s: 0.0, audio_duration_s: 1.0 },
            ChunkEvent { arrival_s: 1.5, audio_duration_s: 1.0 },
        ],
        1.5,
    )
    .unwrap();
    assert_eq!(underrun_report(&late).unwrap(), vec![(1, 0.5)]);
    println!("ACCEPTANCE 8 underrun theorem over 1000 tight traces (0 counterexamples): PASS");
}

#[test]
fn criterion_09_endpoint_timing() {
    // Speech ends at exactly 2.000 s; with 30 ms frames the last speech
    // frame ends at 2.010 s, so the frame-quantized endpoint is 3.510 s.
    let lead = gen_silence(0.3, RATE);
    let tone = gen_tone(440.0, 1.7, 0.5, RATE);
    let tail = gen_silence(2.0, RATE);
    let input = concat(&[&lead, &tone, &tail]).unwrap();
    let cfg = voicelab::endpoint::EndpointConfig::default();
    let labels = voicelab::endpoint::label_frames(&input, &cfg).unwrap();
    let endpoint = voicelab::endpoint::find_endpoint(&labels, &cfg).unwrap();
    assert!(
        (endpoint - 3.5).abs() <= 0.030 + 1e-12,
        "endpoint {endpoint} outside 3.500 +/- 0.030"
    );
    assert!((endpoint - 3.51).abs() < 1e-9, "frame-quantized endpoint moved: {endpoint}");
    println!("ACCEPTANCE 9 endpoint at 3.500 s +/- 30 ms (exact 3.510): PASS");
}

#[test]
fn criterion_10_length_invariant_rtf() {
    let cb = default_codebooks();
    let model = LatencyModel::new(0.0, 2e-5);
    let tts_config = TtsConfig {
        rvq: RvqConfig::truncated(16),
        chunk_frames: 2250,
        dim: 16,
        frames_per_char: 2,
        sample_rate_hz: RATE,
        seed: hash_fold(42, 2),
    };
    let run = |chars: usize| {
        let text: String = (0..chars).map(|i| (b'a' + (i % 26) as u8) as char).collect();
        let mut tts = SynthTts::new(model, tts_config, cb.clone()).unwrap();
        let out = tts.run(&[Segment::immediate(text)], ClockMode::Virtual).unwrap();
        (rtf(&out.trace).unwrap(), first_chunk_latency_ms(&out.trace).unwrap())
    };
    let (rtf_short, latency_short) = run(151);
    let (rtf_long, latency_long) = run(451);
    assert!(
        (rtf_short - rtf_long).abs() < 1e-9,
        "RTF differs: {rtf_short} vs {rtf_long}"
    );
    let latency_ratio = latency_long / latency_short;
    let char_ratio = 451.0 / 151.0;
    assert!(
        (latency_ratio / char_ratio - 1.0).abs() < 0.05,
        "latency ratio {latency_ratio} strays from char ratio {char_ratio}"
    );
    println!("ACCEPTANCE 10 RTF length-invariant (1e-9); latency tracks char count: PASS");
}

#[test]
fn criterion_11_sweep_determinism() {
    let exe = env!("CARGO_BIN_EXE_voicelab");
    let run = || {
        let out = Command::new(exe)
            .args(["sweep", "--seed", "123", "--text-len", "400", "--clock", "virtual"])
            .env_remove("LAVA_BENCH_SEED")
            .output()
            .expect("sweep runs");
        assert!(out.status.success(), "sweep failed: {}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let first = run();
    let second = run();
    assert!(!first.is_empty());
    assert_eq!(first, second, "sweep output is not byte-identical");
    println!("ACCEPTANCE 11 sweep CSV byte-identical across runs: PASS");
}

/// Exercised alongside the numbered criteria: the documented error paths
/// stay errors.
#[test]
fn error_contracts_hold() {
    assert!(matches!(replay_profile(-1.0, 0.0, 0.0, Mode::Oneshot), Err(Error::Metrics(_))));
    let empty = StreamTrace::new(vec![], 0.0).unwrap();
    assert!(first_chunk_latency_ms(&empty).is_err());
    assert!(pad_indices(&[], 3, Padding::Mean, 8).is_err());
}
