//! RVQ-iteration sweep: one column per iteration count, rows mirroring the
//! streaming TTS metric tables plus SNR rows per decoder configuration.
//!
//! The sweep drives the TTS stage directly (one immediate segment per text)
//! so the columns isolate the codec's effect. Output is deterministic under
//! the virtual clock: fixed decimal formatting, LF line endings, stable row
//! order. See `docs/sweep_schema.md` for the full row list.

use crate::{resolve_seed, ClockArg};
use clap::{Args, ValueEnum};
use std::path::PathBuf;
use voicelab::latency::{summarize, underrun_report, LatencyReport};
use voicelab::pipeline::{build_codebooks, PipelineConfig};
use voicelab::quality::{reference_snr, wada_snr};
use voicelab::rng::{hash_fold, SplitMix64};
use voicelab::rvq::{Padding, RvqConfig};
use voicelab::signal::Waveform;
use voicelab::stages::{ClockMode, Segment, SynthTts, TtsConfig};
use voicelab::Error;

pub const SCHEMA_VERSION: &str = "voicelab-sweep-v1";

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PadArg {
    None,
    Mean,
    Concat,
}

#[derive(Args)]
pub struct SweepArgs {
    /// RVQ iteration counts (columns), comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![16, 20, 24, 32])]
    q: Vec<usize>,
    /// Padding strategies for the wide-decoder comparison rows.
    #[arg(long, value_delimiter = ',', value_enum, default_values_t = vec![PadArg::Mean, PadArg::Concat])]
    padding: Vec<PadArg>,
    /// Decoder index width for padded rows (default: trained stage count).
    #[arg(long)]
    decoder_codebooks: Option<usize>,
    /// Literal input text; repeatable.
    #[arg(long)]
    text: Vec<String>,
    /// Generated-input length in characters; repeatable.
    #[arg(long)]
    text_len: Vec<usize>,
    /// Frames per audio chunk.
    #[arg(long, default_value_t = 512)]
    chunk_frames: usize,
    /// Runs per cell; metrics are averaged (identical under virtual clock).
    #[arg(long, default_value_t = 1)]
    repetitions: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "virtual")]
    clock: ClockArg,
    /// Pipeline config JSON supplying codec and stage-model parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write the CSV to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Cell {
    report: LatencyReport,
    underruns: usize,
    wada_utterance_db: f64,
    wada_per_chunk_db: f64,
    reference_db: f64,
    /// (padding, wada_db, reference_db); empty cells when q equals the
    /// decoder width.
    padded: Vec<(PadArg, Option<(f64, f64)>)>,
}

pub fn cmd_sweep(args: SweepArgs) -> Result<(), Error> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read '{}': {e}", path.display())))?;
            PipelineConfig::from_json(&text)?
        }
        None => PipelineConfig::default(),
    };
    cfg.seed = resolve_seed(args.seed, cfg.seed);
    cfg.chunk_frames = args.chunk_frames;
    let clock: ClockMode = args.clock.into();

    if args.q.is_empty() {
        return Err(Error::Config("sweep needs at least one q value".into()));
    }
    let decoder = args.decoder_codebooks.unwrap_or(cfg.codec.n_stages);
    for &q in &args.q {
        if q == 0 || q > cfg.codec.n_stages {
            return Err(Error::Config(format!(
                "q={q} outside the trained stage range 1..={}",
                cfg.codec.n_stages
            )));
        }
        if q > decoder {
            return Err(Error::Config(format!("q={q} exceeds decoder width {decoder}")));
        }
    }
    if args.repetitions == 0 {
        return Err(Error::Config("repetitions must be at least 1".into()));
    }
    let paddings: Vec<PadArg> =
        args.padding.iter().copied().filter(|p| *p != PadArg::None).collect();

    // Input texts: literals first, then generated lengths; default one
    // generated 1200-char text.
    let mut texts: Vec<(String, String)> = Vec::new();
    for (i, t) in args.text.iter().enumerate() {
        texts.push((format!("text{}", i + 1), t.clone()));
    }
    let lens = if args.text.is_empty() && args.text_len.is_empty() {
        vec![1200]
    } else {
        args.text_len.clone()
    };
    for &len in &lens {
        if len == 0 {
            return Err(Error::Config("text length must be positive".into()));
        }
        texts.push((format!("len{len}"), generated_text(len, cfg.seed)));
    }

    let codebooks = build_codebooks(&cfg)?;
    // Row 1 carries the schema version and the codec-training seed so a
    // sweep is reproducible from its own output.
    let mut csv = format!("schema_version,{SCHEMA_VERSION},seed,{}\n", cfg.seed);
    for (block, (label, text)) in texts.iter().enumerate() {
        if block > 0 {
            csv.push('\n');
        }
        csv.push_str(&format!("text,{label},chars,{}\n", text.chars().count()));
        csv.push_str("Metric (RVQ Iterations)");
        for q in &args.q {
            csv.push_str(&format!(",{q}"));
        }
        csv.push('\n');

        let mut cells = Vec::new();
        for &q in &args.q {
            cells.push(run_cell(&cfg, &codebooks, text, q, decoder, &paddings, clock, args.repetitions)?);
        }
        render_rows(&mut csv, &args.q, &cells, decoder, &paddings);
    }

    print!("{csv}");
    if let Some(path) = &args.out {
        std::fs::write(path, &csv)
            .map_err(|e| Error::Config(format!("cannot write '{}': {e}", path.display())))?;
    }
    Ok(())
}

fn generated_text(len: usize, seed: u64) -> String {
    const CHARS: &[u8] = b"abcdefghijklmnopqrstuvwxyz    ,.";
    let mut rng = SplitMix64::new(hash_fold(seed, len as u64));
    (0..len).map(|_| CHARS[rng.next_index(CHARS.len())] as char).collect()
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    cfg: &PipelineConfig,
    codebooks: &std::sync::Arc<voicelab::rvq::CodebookSet>,
    text: &str,
    q: usize,
    decoder: usize,
    paddings: &[PadArg],
    clock: ClockMode,
    repetitions: usize,
) -> Result<Cell, Error> {
    let tts_config = |rvq: RvqConfig| TtsConfig {
        rvq,
        chunk_frames: cfg.chunk_frames,
        dim: cfg.codec.dim,
        frames_per_char: cfg.frames_per_char,
        sample_rate_hz: voicelab::signal::DEFAULT_SAMPLE_RATE,
        seed: hash_fold(cfg.seed, 2),
    };

    let mut tts = SynthTts::new(cfg.models.tts, tts_config(RvqConfig::truncated(q)), codebooks.clone())?;
    let segments = [Segment::immediate(text)];
    let mut reports = Vec::new();
    let mut last_output = None;
    for _ in 0..repetitions {
        let output = tts.run(&segments, clock)?;
        reports.push((summarize(&output.trace)?, underrun_report(&output.trace)?.len()));
        last_output = Some(output);
    }
    let output = last_output.expect("at least one repetition");
    let report = average_reports(&reports);
    let underruns =
        (reports.iter().map(|(_, u)| *u).sum::<usize>() as f64 / reports.len() as f64).round() as usize;

    let audio = output.audio()?;
    let reference = output.reference_audio()?;
    let wada_utterance_db = wada_snr(&audio)?;
    let wada_per_chunk_db = mean_chunk_wada(&output.chunks.iter().map(|c| &c.waveform).collect::<Vec<_>>())?;
    let reference_db = reference_snr(&reference, &audio)?;

    let mut padded = Vec::new();
    for &p in paddings {
        if q == decoder {
            padded.push((p, None));
            continue;
        }
        let rvq = RvqConfig::new(
            q,
            decoder,
            match p {
                PadArg::Mean => Padding::Mean,
                PadArg::Concat => Padding::Concat,
                PadArg::None => unreachable!("filtered out"),
            },
        )?;
        let mut tts = SynthTts::new(cfg.models.tts, tts_config(rvq), codebooks.clone())?;
        let out = tts.run(&segments, clock)?;
        let padded_audio = out.audio()?;
        padded.push((
            p,
            Some((wada_snr(&padded_audio)?, reference_snr(&reference, &padded_audio)?)),
        ));
    }

    Ok(Cell { report, underruns, wada_utterance_db, wada_per_chunk_db, reference_db, padded })
}

fn mean_chunk_wada(chunks: &[&Waveform]) -> Result<f64, Error> {
    let mut sum = 0.0;
    for c in chunks {
        sum += wada_snr(c)?;
    }
    Ok(sum / chunks.len() as f64)
}

/// Averages rounded reports across repetitions (identical under the virtual
/// clock; wall-clock runs vary).
fn average_reports(reports: &[(LatencyReport, usize)]) -> LatencyReport {
    let n = reports.len() as f64;
    let mean = |f: &dyn Fn(&LatencyReport) -> f64| reports.iter().map(|(r, _)| f(r)).sum::<f64>() / n;
    let mean_opt = |f: &dyn Fn(&LatencyReport) -> Option<f64>| {
        let values: Vec<f64> = reports.iter().filter_map(|(r, _)| f(r)).collect();
        if values.len() == reports.len() {
            Some(values.iter().sum::<f64>() / n)
        } else {
            None
        }
    };
    LatencyReport {
        first_chunk_latency_ms: mean(&|r| r.first_chunk_latency_ms),
        rtf: mean(&|r| r.rtf),
        n_chunks: reports[0].0.n_chunks,
        avg_chunk_size_ms: mean(&|r| r.avg_chunk_size_ms),
        avg_inter_chunk_latency_ms: mean_opt(&|r| r.avg_inter_chunk_latency_ms),
        min_inter_chunk_latency_ms: mean_opt(&|r| r.min_inter_chunk_latency_ms),
        max_inter_chunk_latency_ms: mean_opt(&|r| r.max_inter_chunk_latency_ms),
        chunks_per_second: mean(&|r| r.chunks_per_second),
        underrun_count: reports[0].0.underrun_count,
    }
}

fn render_rows(csv: &mut String, q_values: &[usize], cells: &[Cell], decoder: usize, paddings: &[PadArg]) {
    let row = |csv: &mut String, label: &str, value: &dyn Fn(&Cell) -> String| {
        csv.push_str(label);
        for cell in cells {
            csv.push(',');
            csv.push_str(&value(cell));
        }
        csv.push('\n');
    };
    let opt_ms = |v: Option<f64>| v.map(|x| format!("{x:.1}")).unwrap_or_default();

    row(csv, "First Chunk Latency (ms)", &|c| format!("{:.1}", c.report.first_chunk_latency_ms));
    row(csv, "Real-Time Factor (RTF)", &|c| format!("{:.3}", c.report.rtf));
    row(csv, "Number of Chunks", &|c| format!("{}", c.report.n_chunks));
    row(csv, "Avg. Chunk Size (ms)", &|c| format!("{:.1}", c.report.avg_chunk_size_ms));
    row(csv, "Avg. Inter-Chunk Latency (ms)", &|c| opt_ms(c.report.avg_inter_chunk_latency_ms));
    row(csv, "Min Inter-Chunk Latency (ms)", &|c| opt_ms(c.report.min_inter_chunk_latency_ms));
    row(csv, "Max Inter-Chunk Latency (ms)", &|c| opt_ms(c.report.max_inter_chunk_latency_ms));
    row(csv, "Chunks per Second", &|c| format!("{:.2}", c.report.chunks_per_second));
    row(csv, "Underruns", &|c| format!("{}", c.underruns));
    row(csv, "SNR (dB)", &|c| format!("{:.3}", c.wada_utterance_db));
    row(csv, "WADA SNR per chunk (dB)", &|c| format!("{:.3}", c.wada_per_chunk_db));
    row(csv, "Reference SNR (dB)", &|c| format!("{:.3}", c.reference_db));

    if !paddings.is_empty() {
        for (i, &p) in paddings.iter().enumerate() {
            let name = match p {
                PadArg::Mean => "Mean Pad",
                PadArg::Concat => "Concat Pad",
                PadArg::None => continue,
            };
            row(csv, &format!("{decoder} Mimi Codebooks + {name}"), &|c| {
                c.padded[i].1.map(|(w, _)| format!("{w:.3}")).unwrap_or_default()
            });
        }
        // The matched-width configuration, for eyeballing against the padded
        // rows above.
        row(csv, "n Mimi Codebooks", &|c| format!("{:.3}", c.wada_utterance_db));
        for (i, &p) in paddings.iter().enumerate() {
            let name = match p {
                PadArg::Mean => "mean pad",
                PadArg::Concat => "concat pad",
                PadArg::None => continue,
            };
            row(csv, &format!("Reference SNR (dB) [{name}]"), &|c| {
                c.padded[i].1.map(|(_, r)| format!("{r:.3}")).unwrap_or_default()
            });
        }
    }
    let _ = q_values;
}
