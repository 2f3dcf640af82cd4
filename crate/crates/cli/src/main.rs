//! `arcmon` — command-line pipeline for arc-stability monitoring.
//!
//! Stages communicate through files so each one is independently runnable
//! and testable: `synth` writes trace CSVs and a manifest, `extract` turns
//! traces into the feature table, `train` fits a classifier to JSON,
//! `eval` produces the metrics report plus curve CSVs, `monitor` streams
//! NDJSON events, and `report` renders a saved report for humans.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use arcmon_core::classify::{self, Dataset, TrainedModel};
use arcmon_core::config::RunConfig;
use arcmon_core::eval::{self, EvalReport};
use arcmon_core::features::{self, FeatureRow};
use arcmon_core::monitor::{MonitorConfig, MonitorState};
use arcmon_core::signal::{self, generate_phase, segment, RegimeLabel, SignalTrace, TraceFormat};
use arcmon_core::tfr::SpectralPipeline;

#[derive(Parser)]
#[command(name = "arcmon", version, about = "Arc-stability monitoring pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Run configuration JSON; defaults ship built in.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config master seed (re-derives phase seeds).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for artifacts.
    #[arg(long, default_value = "out", global = true)]
    out: PathBuf,
    /// Assert the stage's output format (csv, ndjson or json); each stage
    /// has a fixed natural format and rejects a mismatch.
    #[arg(long, global = true)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the three-phase dataset traces and a concatenated session.
    Synth {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Extract the feature table from synthesized traces or a single trace.
    Extract {
        #[command(flatten)]
        common: CommonOpts,
        /// Trace CSV to extract from instead of the synth manifest.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Label every window of `--trace` with this regime.
        #[arg(long)]
        label: Option<String>,
        /// Sample rate for single-column trace CSVs.
        #[arg(long)]
        sample_rate: Option<f64>,
        /// Also export the spectrogram matrix and its JSON sidecar.
        #[arg(long)]
        spectrogram: bool,
    },
    /// Train a classifier on the feature table.
    Train {
        #[command(flatten)]
        common: CommonOpts,
        /// Feature CSV; defaults to `<out>/features.csv`.
        #[arg(long)]
        features: Option<PathBuf>,
        /// Select SVM (C, gamma) by inner 5-fold cross-validation.
        #[arg(long)]
        grid: bool,
    },
    /// Evaluate: hold-out, cross-validation, curves, CI, importance.
    Eval {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Stream samples through the early-warning monitor, NDJSON per event.
    Monitor {
        #[command(flatten)]
        common: CommonOpts,
        /// Trained model JSON; defaults to `<out>/model.json`.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Input file; standard input when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Input encoding: `csv` lines or `f32le` binary.
        #[arg(long, default_value = "csv")]
        input_format: String,
        /// Override the ASI warning threshold.
        #[arg(long)]
        asi_threshold: Option<f64>,
        /// Feed the monitor in chunks of this many samples.
        #[arg(long, default_value_t = 1024)]
        chunk: usize,
    },
    /// Render a saved evaluation report as text.
    Report {
        /// Report JSON; defaults to `<out>/report.json`.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Print the effective run configuration (defaults merged with
    /// `--config`/`--seed`) as JSON.
    Config {
        #[command(flatten)]
        common: CommonOpts,
    },
}

/// Machine-readable error envelope printed to standard error.
#[derive(Serialize)]
struct ErrorEnvelope<'a> {
    stage: &'a str,
    error: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stage = match &cli.command {
        Command::Synth { .. } => "synth",
        Command::Extract { .. } => "extract",
        Command::Train { .. } => "train",
        Command::Eval { .. } => "eval",
        Command::Monitor { .. } => "monitor",
        Command::Report { .. } => "report",
        Command::Config { .. } => "config",
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            let envelope = ErrorEnvelope {
                stage,
                error: format!("{err:#}"),
            };
            eprintln!(
                "{}",
                serde_json::to_string(&envelope)
                    .unwrap_or_else(|_| format!("{{\"stage\":\"{stage}\"}}"))
            );
            ExitCode::from(2)
        }
    }
}

/// Stages emit one canonical format; `--format` is a guard, not a switch.
fn check_format(common: &CommonOpts, natural: &str) -> Result<()> {
    if let Some(requested) = &common.format {
        let known = ["csv", "ndjson", "json"];
        if !known.contains(&requested.as_str()) {
            bail!("unknown format {requested:?}; choose one of {known:?}");
        }
        if requested != natural {
            bail!("this stage emits {natural}, not {requested}");
        }
    }
    Ok(())
}

fn load_config(common: &CommonOpts) -> Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => {
            RunConfig::load(path).with_context(|| format!("loading config {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.override_seed(seed);
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Synth { common } => synth(&common),
        Command::Extract {
            common,
            trace,
            label,
            sample_rate,
            spectrogram,
        } => extract(&common, trace, label, sample_rate, spectrogram),
        Command::Train {
            common,
            features,
            grid,
        } => train_cmd(&common, features, grid),
        Command::Eval { common, features } => eval_cmd(&common, features),
        Command::Monitor {
            common,
            model,
            input,
            input_format,
            asi_threshold,
            chunk,
        } => monitor_cmd(&common, model, input, &input_format, asi_threshold, chunk),
        Command::Report { report, common } => report_cmd(&common, report),
        Command::Config { common } => {
            let config = load_config(&common)?;
            println!("{}", config.to_json()?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Manifest describing what `synth` wrote.
#[derive(Serialize, Deserialize)]
struct SynthManifest {
    config_hash: String,
    sample_rate: f64,
    phases: Vec<PhaseEntry>,
    session: SessionEntry,
}

#[derive(Serialize, Deserialize)]
struct PhaseEntry {
    label: String,
    path: String,
    samples: usize,
    windows: usize,
}

#[derive(Serialize, Deserialize)]
struct SessionEntry {
    path: String,
    ranges: Vec<(usize, usize, String)>,
}

fn synth(common: &CommonOpts) -> Result<ExitCode> {
    check_format(common, "csv")?;
    let config = load_config(common)?;
    let hash = config.hash()?;
    std::fs::create_dir_all(&common.out)?;

    let mut phases = Vec::new();
    let mut session = Vec::new();
    let mut ranges = Vec::new();
    for (label, params) in config.generate.phases() {
        let trace = generate_phase(label, params)?;
        let file = format!("{label}.csv");
        signal::save_trace_csv(&trace, common.out.join(&file))?;
        let windows =
            signal::window_count(trace.len(), config.pipeline.window_len, config.pipeline.hop);
        let start = session.len();
        session.extend_from_slice(&trace.samples);
        ranges.push((start, session.len(), label.to_string()));
        phases.push(PhaseEntry {
            label: label.to_string(),
            path: file,
            samples: trace.len(),
            windows,
        });
    }
    let session_trace =
        SignalTrace::new(session, config.pipeline.sample_rate).map_err(|e| anyhow!("{e}"))?;
    signal::save_trace_csv(&session_trace, common.out.join("session.csv"))?;

    let manifest = SynthManifest {
        config_hash: hash,
        sample_rate: config.pipeline.sample_rate,
        phases,
        session: SessionEntry {
            path: "session.csv".into(),
            ranges,
        },
    };
    std::fs::write(
        common.out.join("synth_manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    println!(
        "synth: wrote 3 phase traces + session to {}",
        common.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

/// Sidecar embedding the config hash next to a CSV artifact.
#[derive(Serialize, Deserialize)]
struct CsvSidecar {
    config_hash: String,
    rows: usize,
}

fn extract(
    common: &CommonOpts,
    trace: Option<PathBuf>,
    label: Option<String>,
    sample_rate: Option<f64>,
    spectrogram: bool,
) -> Result<ExitCode> {
    check_format(common, "csv")?;
    let config = load_config(common)?;
    let hash = config.hash()?;
    std::fs::create_dir_all(&common.out)?;
    let pipeline = SpectralPipeline::new(
        config.pipeline.window_len,
        config.pipeline.nfft,
        config.pipeline.sample_rate,
    )?;

    let mut rows: Vec<FeatureRow> = Vec::new();
    let mut all_frames = Vec::new();
    match trace {
        Some(path) => {
            let format = match path.extension().and_then(|e| e.to_str()) {
                Some("wav") => TraceFormat::Wav,
                _ => TraceFormat::Csv,
            };
            let mut tr = signal::load_trace(&path, format, sample_rate)?;
            if tr.is_empty() {
                bail!("empty input");
            }
            if let Some(name) = &label {
                let regime = RegimeLabel::parse(name)?;
                let count =
                    signal::window_count(tr.len(), config.pipeline.window_len, config.pipeline.hop);
                tr.labels = Some((0..count).map(|w| (w, regime)).collect());
            }
            let frames = segment(&tr, config.pipeline.window_len, config.pipeline.hop)?;
            rows.extend(features::extract_features_with(
                &pipeline,
                &frames,
                &config.pipeline.bands,
            )?);
            all_frames = frames;
        }
        None => {
            let manifest_path = common.out.join("synth_manifest.json");
            let manifest: SynthManifest = serde_json::from_str(
                &std::fs::read_to_string(&manifest_path).with_context(|| {
                    format!(
                        "reading {} (run `arcmon synth` first or pass --trace)",
                        manifest_path.display()
                    )
                })?,
            )?;
            let mut next_frame = 0usize;
            for phase in &manifest.phases {
                let regime = RegimeLabel::parse(&phase.label)?;
                let mut tr =
                    signal::load_trace(common.out.join(&phase.path), TraceFormat::Csv, None)?;
                let count =
                    signal::window_count(tr.len(), config.pipeline.window_len, config.pipeline.hop);
                tr.labels = Some((0..count).map(|w| (w, regime)).collect());
                let frames = segment(&tr, config.pipeline.window_len, config.pipeline.hop)?;
                for mut row in
                    features::extract_features_with(&pipeline, &frames, &config.pipeline.bands)?
                {
                    row.frame = next_frame;
                    next_frame += 1;
                    rows.push(row);
                }
                all_frames.extend(frames);
            }
        }
    }
    if rows.is_empty() {
        bail!("empty input");
    }

    let features_path = common.out.join("features.csv");
    features::write_feature_csv(&rows, &features_path)?;
    std::fs::write(
        common.out.join("features.meta.json"),
        serde_json::to_string_pretty(&CsvSidecar {
            config_hash: hash,
            rows: rows.len(),
        })?,
    )?;

    if spectrogram {
        let psds: Vec<_> = all_frames
            .iter()
            .map(|f| pipeline.psd_frame(f))
            .collect::<arcmon_core::Result<_>>()?;
        arcmon_core::tfr::export_spectrogram(
            &psds,
            config.pipeline.hop as f64 / config.pipeline.sample_rate,
            config.pipeline.nfft,
            common.out.join("spectrogram.csv"),
            common.out.join("spectrogram.meta.json"),
        )?;
    }
    println!(
        "extract: {} feature rows -> {}",
        rows.len(),
        features_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

/// Model artifact: the trained model plus the config hash that produced it.
#[derive(Serialize, Deserialize)]
struct ModelArtifact {
    config_hash: String,
    model: TrainedModel,
}

fn read_dataset(common: &CommonOpts, features: Option<PathBuf>) -> Result<Dataset> {
    let path = features.unwrap_or_else(|| common.out.join("features.csv"));
    let rows =
        features::read_feature_csv(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Dataset::from_rows(&rows)?)
}

fn effective_hyperparams(
    config: &RunConfig,
    ds: &Dataset,
    grid_flag: bool,
) -> Result<classify::Hyperparams> {
    let mut hp = config.train.hyperparams.clone();
    if (grid_flag || config.train.grid_search) && config.train.model == classify::ModelKind::SvmRbf
    {
        hp = eval::grid_search_svm(ds, &[1.0, 10.0, 100.0], &[0.05, 0.1, 0.5], 5, config.seed)?;
    }
    Ok(hp)
}

fn train_cmd(common: &CommonOpts, features: Option<PathBuf>, grid: bool) -> Result<ExitCode> {
    check_format(common, "json")?;
    let config = load_config(common)?;
    let ds = read_dataset(common, features)?;
    let hp = effective_hyperparams(&config, &ds, grid)?;
    let model = classify::train(&ds, config.train.model, &hp, config.seed)?;
    let out = common.out.join("model.json");
    std::fs::create_dir_all(&common.out)?;
    std::fs::write(
        &out,
        serde_json::to_string_pretty(&ModelArtifact {
            config_hash: config.hash()?,
            model,
        })?,
    )?;
    println!(
        "train: {} model on {} rows -> {}",
        config.train.model,
        ds.len(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

/// Report artifact: the evaluation report plus config hash.
#[derive(Serialize, Deserialize)]
struct ReportArtifact {
    config_hash: String,
    report: EvalReport,
}

fn eval_cmd(common: &CommonOpts, features: Option<PathBuf>) -> Result<ExitCode> {
    check_format(common, "json")?;
    let config = load_config(common)?;
    let ds = read_dataset(common, features)?;
    let hp = effective_hyperparams(&config, &ds, false)?;
    let report = eval::evaluate(
        &ds,
        config.train.model,
        &hp,
        &config.eval.options,
        config.seed,
    )?;

    std::fs::create_dir_all(&common.out)?;
    for (kind, curves) in [("roc", &report.roc), ("pr", &report.pr)] {
        for curve in curves {
            let mut body = String::from(if kind == "roc" {
                "fpr,tpr\n"
            } else {
                "recall,precision\n"
            });
            for (x, y) in &curve.points {
                body.push_str(&format!("{x},{y}\n"));
            }
            std::fs::write(common.out.join(format!("{kind}_{}.csv", curve.class)), body)?;
        }
    }
    let report_path = common.out.join("report.json");
    std::fs::write(
        &report_path,
        serde_json::to_string_pretty(&ReportArtifact {
            config_hash: config.hash()?,
            report: report.clone(),
        })?,
    )?;
    println!(
        "eval: accuracy {:.4}, macro-F1 {:.4} -> {}",
        report.holdout.accuracy,
        report.holdout.macro_f1,
        report_path.display()
    );

    let thresholds = &config.eval.thresholds;
    let mut violated = false;
    if let Some(min) = thresholds.min_accuracy {
        if report.holdout.accuracy < min {
            eprintln!(
                "{}",
                serde_json::json!({
                    "stage": "eval",
                    "error": format!("accuracy {:.4} below threshold {min}", report.holdout.accuracy)
                })
            );
            violated = true;
        }
    }
    if let Some(min) = thresholds.min_macro_f1 {
        if report.holdout.macro_f1 < min {
            eprintln!(
                "{}",
                serde_json::json!({
                    "stage": "eval",
                    "error": format!("macro-F1 {:.4} below threshold {min}", report.holdout.macro_f1)
                })
            );
            violated = true;
        }
    }
    Ok(if violated {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    })
}

fn read_samples(input: Option<&Path>, format: &str) -> Result<Vec<f64>> {
    let mut raw = Vec::new();
    match input {
        Some(path) => {
            std::fs::File::open(path)
                .with_context(|| format!("opening {}", path.display()))?
                .read_to_end(&mut raw)?;
        }
        None => {
            std::io::stdin().read_to_end(&mut raw)?;
        }
    }
    match format {
        "f32le" => {
            if raw.len() % 4 != 0 {
                bail!("binary input length {} is not a multiple of 4", raw.len());
            }
            Ok(raw
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
                .collect())
        }
        "csv" => {
            let mut samples = Vec::new();
            for (i, line) in raw.split(|&b| b == b'\n').enumerate() {
                let line = String::from_utf8_lossy(line);
                let line = line.trim();
                if line.is_empty() || line.starts_with("time_s") || line == "current_a" {
                    continue;
                }
                // last column is the current sample
                let field = line.rsplit(',').next().unwrap_or(line);
                samples.push(
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| anyhow!("parse error at line {}: {e} ({field:?})", i + 1))?,
                );
            }
            Ok(samples)
        }
        other => bail!("unknown input format {other:?}; use csv or f32le"),
    }
}

fn monitor_cmd(
    common: &CommonOpts,
    model_path: Option<PathBuf>,
    input: Option<PathBuf>,
    input_format: &str,
    asi_threshold: Option<f64>,
    chunk: usize,
) -> Result<ExitCode> {
    check_format(common, "ndjson")?;
    let config = load_config(common)?;
    let path = model_path.unwrap_or_else(|| common.out.join("model.json"));
    let artifact: ModelArtifact = serde_json::from_str(
        &std::fs::read_to_string(&path)
            .with_context(|| format!("reading model {}", path.display()))?,
    )?;

    let mut monitor_config: MonitorConfig = config.monitor.clone();
    monitor_config.window_len = config.pipeline.window_len;
    monitor_config.hop = config.pipeline.hop;
    monitor_config.nfft = config.pipeline.nfft;
    monitor_config.sample_rate = config.pipeline.sample_rate;
    monitor_config.bands = config.pipeline.bands;
    // threshold precedence: flag, then model calibration, then config
    if let Some(delta) = asi_threshold.or(artifact.model.asi_threshold) {
        monitor_config.asi_threshold = delta;
    }

    let samples = read_samples(input.as_deref(), input_format)?;
    let mut state = MonitorState::new(monitor_config, artifact.model)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for piece in samples.chunks(chunk.max(1)) {
        for event in state.step(piece)? {
            serde_json::to_writer(&mut out, &event)?;
            out.write_all(b"\n")?;
            out.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn report_cmd(common: &CommonOpts, report: Option<PathBuf>) -> Result<ExitCode> {
    let path = report.unwrap_or_else(|| common.out.join("report.json"));
    let artifact: ReportArtifact = serde_json::from_str(
        &std::fs::read_to_string(&path)
            .with_context(|| format!("reading report {}", path.display()))?,
    )?;
    let r = &artifact.report;
    println!("model: {}", r.model_kind);
    println!("config hash: {}", artifact.config_hash);
    println!(
        "dataset: {} windows, {} features, per-class {:?}",
        r.dataset.n_windows, r.dataset.n_features, r.dataset.per_class
    );
    println!(
        "hold-out accuracy: {:.4} ({}% CI [{:.4}, {:.4}], n={})",
        r.holdout.accuracy,
        r.ci.level * 100.0,
        r.ci.low,
        r.ci.high,
        r.ci.n
    );
    println!("confusion (rows = truth, cols = predicted):");
    let names = ["transient", "stable", "extinction"];
    for (name, row) in names.iter().zip(&r.holdout.confusion) {
        println!("  {name:>11} {row:?}");
    }
    for (name, m) in names.iter().zip(&r.holdout.per_class) {
        println!(
            "  {name:>11} precision {:.3} recall {:.3} f1 {:.3}",
            m.precision, m.recall, m.f1
        );
    }
    println!(
        "cv: {}-fold {:.3} +/- {:.3}{}",
        r.cv.kfold_k,
        r.cv.kfold.mean,
        r.cv.kfold.std,
        r.cv.loo
            .as_ref()
            .map(|l| format!(", LOO {:.3}", l.mean))
            .unwrap_or_default()
    );
    for c in &r.roc {
        if let Some(auc) = c.auc {
            println!("roc-auc {}: {:.4}", c.class, auc);
        }
    }
    println!("top features by permutation importance:");
    for imp in r.importance.iter().take(5) {
        println!("  {:>8} {:.4}", imp.feature, imp.score);
    }
    println!(
        "timing: train {:.3}s, inference {:.3}ms/sample",
        r.timing.train_seconds,
        r.timing.per_sample_inference_seconds * 1e3
    );
    Ok(ExitCode::SUCCESS)
}
