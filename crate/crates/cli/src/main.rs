//! `voicelab` command-line harness.
//!
//! Subcommands: `pipeline` (end-to-end run), `sweep` (RVQ iteration /
//! padding sweeps emitting plot-ready CSV), `trace` (metrics over a trace
//! file), `snr` (blind and reference SNR of WAV files), `endpoint`
//! (end-of-speech detection), and `make-wav` (fixture generation).
//!
//! Exit codes: 0 success, 1 runtime stage failure, 2 usage or config error.
//! The seed is resolved flag > `LAVA_BENCH_SEED` env var > config > default.

mod sweep;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use voicelab::endpoint::{extract_speech, find_endpoint, label_frames, EndpointConfig};
use voicelab::latency::{summarize, underrun_report, LatencyReport, StreamTrace};
use voicelab::pipeline::{
    compare_modes, run_pipeline, Mode, PipelineConfig, PipelineRun, TimeProfile,
};
use voicelab::quality::{reference_snr, wada_snr};
use voicelab::signal::{concat, gen_gamma_signal, gen_silence, gen_tone, read_wav, write_wav};
use voicelab::stages::ClockMode;
use voicelab::Error;

const SEED_ENV_VAR: &str = "LAVA_BENCH_SEED";

#[derive(Parser)]
#[command(name = "voicelab", version, about = "Streaming voice pipeline bench harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Oneshot,
    Streaming,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClockArg {
    Virtual,
    Wall,
}

impl From<ClockArg> for ClockMode {
    fn from(c: ClockArg) -> Self {
        match c {
            ClockArg::Virtual => ClockMode::Virtual,
            ClockArg::Wall => ClockMode::Wall,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the end-to-end pipeline on a WAV file and print its time profile
    /// and latency report as JSON.
    Pipeline(PipelineArgs),
    /// Sweep RVQ iterations and padding strategies; emit metric rows as CSV.
    Sweep(sweep::SweepArgs),
    /// Compute the latency report for a chunk-arrival trace file.
    Trace(TraceArgs),
    /// Estimate SNR of a WAV file (blind; plus reference-based with -r).
    Snr(SnrArgs),
    /// Detect the end of speech in a WAV file.
    Endpoint(EndpointArgs),
    /// Generate a deterministic test WAV.
    MakeWav(MakeWavArgs),
}

#[derive(Args)]
struct PipelineArgs {
    /// Pipeline config JSON (defaults apply when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input WAV (16-bit mono PCM).
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    clock: Option<ClockArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: ReportFormat,
    /// Also write the report to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    /// Trace file: `# generation_end_s=<v>` header plus one
    /// `arrival_s audio_duration_s` line per chunk.
    #[arg(long, short)]
    file: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: ReportFormat,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct SnrArgs {
    #[arg(long, short)]
    input: PathBuf,
    /// Clean reference WAV of identical length for reference-based SNR.
    #[arg(long, short)]
    reference: Option<PathBuf>,
}

#[derive(Args)]
struct EndpointArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, default_value_t = 30)]
    frame_ms: u32,
    #[arg(long, default_value_t = 10.0)]
    threshold_db: f64,
    #[arg(long, default_value_t = 1.5)]
    silence_window_s: f64,
    #[arg(long, default_value_t = 10)]
    noise_floor_frames: usize,
    /// Print the duration of the extracted speech as well.
    #[arg(long)]
    speech_duration: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WavKind {
    /// Speech-shaped burst between stretches of silence.
    Speech,
    /// Sine tone between stretches of silence.
    Tone,
    /// Pure silence.
    Silence,
}

#[derive(Args)]
struct MakeWavArgs {
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "speech")]
    kind: WavKind,
    /// Active (speech/tone) duration in seconds.
    #[arg(long, default_value_t = 1.7)]
    duration_s: f64,
    /// Trailing silence in seconds.
    #[arg(long, default_value_t = 2.0)]
    tail_s: f64,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Pipeline(args) => cmd_pipeline(args),
        Command::Sweep(args) => sweep::cmd_sweep(args),
        Command::Trace(args) => cmd_trace(args),
        Command::Snr(args) => cmd_snr(args),
        Command::Endpoint(args) => cmd_endpoint(args),
        Command::MakeWav(args) => cmd_make_wav(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Stage failures are runtime errors (1); everything else points at the
/// invocation: unusable files, malformed configs, degenerate inputs (2).
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Stage { .. } => 1,
        _ => 2,
    }
}

/// Resolves the run seed: explicit flag, then env, then the config value.
fn resolve_seed(flag: Option<u64>, config_seed: u64) -> u64 {
    if let Some(s) = flag {
        return s;
    }
    if let Ok(text) = std::env::var(SEED_ENV_VAR) {
        if let Ok(s) = text.trim().parse() {
            return s;
        }
    }
    config_seed
}

fn read_file(path: &Path) -> Result<Vec<u8>, Error> {
    std::fs::read(path)
        .map_err(|e| Error::Config(format!("cannot read '{}': {e}", path.display())))
}

fn load_wav(path: &Path) -> Result<voicelab::signal::Waveform, Error> {
    read_wav(&read_file(path)?)
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), Error> {
    print!("{text}");
    if let Some(path) = out {
        std::fs::write(path, text)
            .map_err(|e| Error::Config(format!("cannot write '{}': {e}", path.display())))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RunReport {
    mode: Mode,
    profile: TimeProfile,
    report: LatencyReport,
    transcript: String,
    response_text: String,
    underruns: Vec<(usize, f64)>,
}

fn run_report(mode: Mode, run: &PipelineRun) -> Result<RunReport, Error> {
    Ok(RunReport {
        mode,
        profile: run.profile,
        report: summarize(&run.trace)?,
        transcript: run.transcript.clone(),
        response_text: run.response_text.clone(),
        underruns: underrun_report(&run.trace)?,
    })
}

const RUN_CSV_HEADER: &str = "mode,asr_s,llm_s,tts_s,total_s,first_chunk_latency_ms,rtf,n_chunks,avg_chunk_size_ms,avg_inter_chunk_latency_ms,min_inter_chunk_latency_ms,max_inter_chunk_latency_ms,chunks_per_second,underrun_count";

fn run_csv_row(r: &RunReport) -> String {
    let mode = match r.mode {
        Mode::Oneshot => "oneshot",
        Mode::Streaming => "streaming",
    };
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.1}")).unwrap_or_default();
    format!(
        "{mode},{:.6},{:.6},{:.6},{:.6},{:.1},{:.3},{},{:.1},{},{},{},{:.2},{}",
        r.profile.asr_s,
        r.profile.llm_s,
        r.profile.tts_s,
        r.profile.total_s,
        r.report.first_chunk_latency_ms,
        r.report.rtf,
        r.report.n_chunks,
        r.report.avg_chunk_size_ms,
        opt(r.report.avg_inter_chunk_latency_ms),
        opt(r.report.min_inter_chunk_latency_ms),
        opt(r.report.max_inter_chunk_latency_ms),
        r.report.chunks_per_second,
        r.report.underrun_count,
    )
}

fn render_runs(reports: &[RunReport], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut text = String::from(RUN_CSV_HEADER);
            text.push('\n');
            for r in reports {
                text.push_str(&run_csv_row(r));
                text.push('\n');
            }
            text
        }
        ReportFormat::Json => {
            let value = if reports.len() == 1 {
                serde_json::to_value(&reports[0]).expect("serializable")
            } else {
                let mut map = serde_json::Map::new();
                for r in reports {
                    let key = match r.mode {
                        Mode::Oneshot => "oneshot",
                        Mode::Streaming => "streaming",
                    };
                    map.insert(key.into(), serde_json::to_value(r).expect("serializable"));
                }
                map.into()
            };
            format!("{}\n", serde_json::to_string_pretty(&value).expect("serializable"))
        }
    }
}

fn cmd_pipeline(args: PipelineArgs) -> Result<(), Error> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = String::from_utf8(read_file(path)?)
                .map_err(|e| Error::Config(format!("config is not UTF-8: {e}")))?;
            PipelineConfig::from_json(&text)?
        }
        None => PipelineConfig::default(),
    };
    cfg.seed = resolve_seed(args.seed, cfg.seed);
    if let Some(clock) = args.clock {
        cfg.clock = clock.into();
    }
    let input = load_wav(&args.input)?;

    let mode = args.mode.unwrap_or(match cfg.mode {
        Mode::Oneshot => ModeArg::Oneshot,
        Mode::Streaming => ModeArg::Streaming,
    });
    let reports = match mode {
        ModeArg::Both => {
            let (oneshot, streaming) = compare_modes(&input, &cfg)?;
            vec![run_report(Mode::Oneshot, &oneshot)?, run_report(Mode::Streaming, &streaming)?]
        }
        ModeArg::Oneshot | ModeArg::Streaming => {
            cfg.mode = if mode == ModeArg::Oneshot { Mode::Oneshot } else { Mode::Streaming };
            let run = run_pipeline(&input, &cfg)?;
            vec![run_report(cfg.mode, &run)?]
        }
    };
    emit(&render_runs(&reports, args.format), &args.out)
}

fn cmd_trace(args: TraceArgs) -> Result<(), Error> {
    let text = String::from_utf8(read_file(&args.file)?)
        .map_err(|e| Error::Config(format!("trace is not UTF-8: {e}")))?;
    let trace = StreamTrace::parse_text(&text)?;
    let report = summarize(&trace)?;
    match args.format {
        ReportFormat::Csv => print!("{}", report.to_csv()),
        ReportFormat::Json => {
            let value = serde_json::json!({
                "report": report,
                "underruns": underrun_report(&trace)?,
            });
            println!("{}", serde_json::to_string_pretty(&value).expect("serializable"));
        }
    }
    Ok(())
}

fn cmd_snr(args: SnrArgs) -> Result<(), Error> {
    let input = load_wav(&args.input)?;
    let blind = wada_snr(&input)?;
    match &args.reference {
        None => println!("{}", serde_json::json!({ "wada_snr_db": blind })),
        Some(path) => {
            let reference = load_wav(path)?;
            let by_reference = reference_snr(&reference, &input)?;
            println!(
                "{}",
                serde_json::json!({ "wada_snr_db": blind, "reference_snr_db": by_reference })
            );
        }
    }
    Ok(())
}

fn cmd_endpoint(args: EndpointArgs) -> Result<(), Error> {
    let cfg = EndpointConfig {
        frame_ms: args.frame_ms,
        energy_threshold_db: args.threshold_db,
        silence_window_s: args.silence_window_s,
        noise_floor_frames: args.noise_floor_frames,
    };
    let input = load_wav(&args.input)?;
    let labels = label_frames(&input, &cfg)?;
    match find_endpoint(&labels, &cfg) {
        Some(endpoint_s) => println!("{endpoint_s:.3}"),
        None => println!("none"),
    }
    if args.speech_duration {
        let speech = extract_speech(&input, &cfg)?;
        println!("speech_duration_s {:.3}", speech.duration_s());
    }
    Ok(())
}

fn cmd_make_wav(args: MakeWavArgs) -> Result<(), Error> {
    let rate = voicelab::signal::DEFAULT_SAMPLE_RATE;
    let seed = resolve_seed(args.seed, 42);
    let lead = gen_silence(0.33, rate);
    let tail = gen_silence(args.tail_s, rate);
    let n_active = (args.duration_s * rate as f64).round() as usize;
    let wave = match args.kind {
        WavKind::Speech => {
            let burst = gen_gamma_signal(n_active, 0.4, seed)?;
            concat(&[&lead, &burst, &tail])?
        }
        WavKind::Tone => {
            let tone = gen_tone(440.0, args.duration_s, 0.5, rate);
            concat(&[&lead, &tone, &tail])?
        }
        WavKind::Silence => gen_silence(0.33 + args.duration_s + args.tail_s, rate),
    };
    let bytes = write_wav(&wave)?;
    std::fs::write(&args.out, &bytes)
        .map_err(|e| Error::Config(format!("cannot write '{}': {e}", args.out.display())))?;
    eprintln!("wrote {} ({:.2} s)", args.out.display(), wave.duration_s());
    Ok(())
}
