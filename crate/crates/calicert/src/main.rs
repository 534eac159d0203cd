//! Thin command-line front end over the `calicert` library.
//!
//! Every subcommand resolves its configuration the same way: an optional
//! JSON config file (`--config`, or the `CALICERT_CONFIG` environment
//! variable) supplies a [`RunConfig`], and command-line flags override
//! individual fields. Boolean flags only switch features on; to switch a
//! file-enabled feature off, edit the file.
//!
//! Exit codes: 0 on success, 1 for input or usage errors, 2 for I/O
//! failures while writing results.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use calicert::certify::{
    certified_radius, CertificateMethod, ConfidenceCertificate, RadiusOutcome, SmoothingEvidence,
};
use calicert::metrics::{compute_adaece, compute_ece, compute_tlbs, BinRow, BinningScheme};
use calicert::pipeline::{
    emit_plot_csv, emit_report, evidence_certificate, ingest, load_config, report_json,
    run_pipeline, write_text, IngestData, InputFormat, RecordMode, RunConfig,
};
use calicert::records::PredictionRecord;
use calicert::{Error, Result};

#[derive(Parser)]
#[command(
    name = "calicert",
    version,
    about = "Calibration metrics with certified worst-case bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Observed calibration: ECE, AdaECE, top-label Brier, reliability table
    Metrics(MetricsArgs),
    /// Per-record certified radius and confidence bounds from raw evidence
    Certify(CertifyArgs),
    /// Sweep the certified Brier score (closed form) over radii
    Cbs(SweepArgs),
    /// Sweep the worst-case ECE via the ADMM solver
    Acce(AcceArgs),
    /// Sweep the soft-binning gradient-ascent lower bound on worst-case ECE
    Dece(SweepArgs),
    /// Sweep the exact worst-case ECE by brute force (small inputs only)
    Oracle(SweepArgs),
    /// Full report: all enabled metrics at every radius
    Report(ReportArgs),
    /// Dump the winning solver trace at the first radius as CSV
    Diagnostics(DiagnosticsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Jsonl,
    Csv,
}

impl From<FormatArg> for InputFormat {
    fn from(value: FormatArg) -> Self {
        match value {
            FormatArg::Jsonl => InputFormat::Jsonl,
            FormatArg::Csv => InputFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Precertified,
    Evidence,
}

impl From<ModeArg> for RecordMode {
    fn from(value: ModeArg) -> Self {
        match value {
            ModeArg::Precertified => RecordMode::Precertified,
            ModeArg::Evidence => RecordMode::Evidence,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Standard,
    Cdf,
}

impl From<MethodArg> for CertificateMethod {
    fn from(value: MethodArg) -> Self {
        match value {
            MethodArg::Standard => CertificateMethod::Standard,
            MethodArg::Cdf => CertificateMethod::Cdf,
        }
    }
}

#[derive(Args)]
struct IoArgs {
    /// JSON run-config file; flags override its fields
    #[arg(long, value_name = "PATH", env = "CALICERT_CONFIG")]
    config: Option<PathBuf>,
    /// Input data path
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Input format
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// How to read records
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Write the result here instead of stdout
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Equal-width bin count
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Radii at which to report confidence bounds (comma separated,
    /// ascending)
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    radii: Option<Vec<f64>>,
    /// Certificate construction for the bounds
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Failure-level override for every record
    #[arg(long)]
    alpha: Option<f64>,
    /// Interior threshold count for the cdf certificate
    #[arg(long)]
    threshold_count: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Equal-width bin count
    #[arg(long)]
    bins: Option<usize>,
    /// Radii to sweep (comma separated, ascending)
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    radii: Option<Vec<f64>>,
    /// Certificate construction for evidence-derived bounds
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Failure-level override for evidence records
    #[arg(long)]
    alpha: Option<f64>,
    /// Interior threshold count for the cdf certificate
    #[arg(long)]
    threshold_count: Option<usize>,
    /// Count abstained samples as incorrect in certified accuracy
    #[arg(long)]
    abstain_incorrect: bool,
    /// Solver seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AcceArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    /// Solve with the full evaluation grid instead of one multi-start run
    #[arg(long)]
    ensemble: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    /// Solve with the full evaluation grid instead of one multi-start run
    #[arg(long)]
    ensemble: bool,
    /// Also run the soft-binning gradient baseline
    #[arg(long)]
    dece: bool,
    /// Also run the brute-force oracle (small inputs only)
    #[arg(long)]
    oracle: bool,
    /// Skip the ADMM solver
    #[arg(long)]
    no_admm: bool,
    /// Keep the winning solver trace on each radius row
    #[arg(long)]
    traces: bool,
    /// Also write a flat metric-per-row CSV for plotting
    #[arg(long, value_name = "PATH")]
    plot_output: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnosticsArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    /// Trace the evaluation-grid winner instead of one multi-start run
    #[arg(long)]
    ensemble: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Metrics(args) => cmd_metrics(&args),
        Command::Certify(args) => cmd_certify(&args),
        Command::Cbs(args) => {
            let mut config = sweep_config(&args)?;
            config.admm_enabled = false;
            config.dece = false;
            config.oracle = false;
            run_and_deliver(&config)
        }
        Command::Acce(args) => {
            let mut config = sweep_config(&args.sweep)?;
            config.admm_enabled = true;
            if args.ensemble {
                config.ensemble = true;
            }
            config.dece = false;
            config.oracle = false;
            run_and_deliver(&config)
        }
        Command::Dece(args) => {
            let mut config = sweep_config(&args)?;
            config.admm_enabled = false;
            config.dece = true;
            config.oracle = false;
            run_and_deliver(&config)
        }
        Command::Oracle(args) => {
            let mut config = sweep_config(&args)?;
            config.admm_enabled = false;
            config.dece = false;
            config.oracle = true;
            run_and_deliver(&config)
        }
        Command::Report(args) => cmd_report(&args),
        Command::Diagnostics(args) => cmd_diagnostics(&args),
    }
}

/// Load the config (explicit path, then `CALICERT_CONFIG`, then defaults)
/// and lay the sweep flags over it.
fn sweep_config(args: &SweepArgs) -> Result<RunConfig> {
    let mut config = load_config(args.io.config.as_deref())?;
    if let Some(path) = &args.io.input {
        config.input = Some(path.clone());
    }
    if let Some(format) = args.io.format {
        config.format = format.into();
    }
    if let Some(mode) = args.io.mode {
        config.mode = mode.into();
    }
    if let Some(path) = &args.io.output {
        config.output = Some(path.clone());
    }
    if let Some(bins) = args.bins {
        config.binning.bins = bins;
    }
    if let Some(radii) = &args.radii {
        config.radii = radii.clone();
    }
    if let Some(method) = args.method {
        config.method = method.into();
    }
    if let Some(alpha) = args.alpha {
        config.alpha = Some(alpha);
    }
    if let Some(count) = args.threshold_count {
        config.threshold_count = count;
    }
    if args.abstain_incorrect {
        config.count_abstain_as_incorrect = true;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    Ok(config)
}

/// Run the sweep and either emit files named by the config or print the
/// report to stdout. Ingest warnings go to stderr either way.
fn run_and_deliver(config: &RunConfig) -> Result<()> {
    let report = run_pipeline(config)?;
    warn_all(&report.warnings);
    if let Some(path) = &config.plot_output {
        emit_plot_csv(&report, path)?;
    }
    match &config.output {
        Some(path) => emit_report(&report, path),
        None => {
            print!("{}", report_json(&report));
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct MetricsOut {
    records: usize,
    bins: usize,
    ece: f64,
    /// Equal-count variant; absent when there are fewer records than bins.
    adaece: Option<f64>,
    tlbs: f64,
    reliability: Vec<BinRow>,
}

fn cmd_metrics(args: &MetricsArgs) -> Result<()> {
    let mut config = load_config(args.io.config.as_deref())?;
    if let Some(path) = &args.io.input {
        config.input = Some(path.clone());
    }
    if let Some(format) = args.io.format {
        config.format = format.into();
    }
    if let Some(mode) = args.io.mode {
        config.mode = mode.into();
    }
    if let Some(path) = &args.io.output {
        config.output = Some(path.clone());
    }
    if let Some(bins) = args.bins {
        config.binning.bins = bins;
    }
    config.validate()?;
    let ingested = ingest(required_input(&config)?, config.format, config.mode)?;
    warn_all(&ingested.warnings);
    let records = clean_records(ingested.data)?;
    let scheme = BinningScheme::equal_width(config.binning.bins)?;
    let report = compute_ece(&records, &scheme)?;
    let adaece = if records.len() >= config.binning.bins {
        Some(compute_adaece(&records, config.binning.bins)?.ece)
    } else {
        None
    };
    let out = MetricsOut {
        records: records.len(),
        bins: config.binning.bins,
        ece: report.ece,
        adaece,
        tlbs: compute_tlbs(&records)?,
        reliability: report.rows,
    };
    deliver(&pretty(&out), config.output.as_deref())
}

/// Reduce either input shape to clean prediction records. Evidence records
/// contribute their mean observed confidence; abstention is a certification
/// concept and does not filter observed metrics.
fn clean_records(data: IngestData) -> Result<Vec<PredictionRecord>> {
    match data {
        IngestData::Precertified(records) => Ok(records),
        IngestData::Evidence(items) => items
            .into_iter()
            .map(|item| {
                let confidence = item
                    .evidence
                    .mean_confidence()
                    .map_err(|e| Error::Input(format!("record {}: {e}", item.id)))?;
                Ok(PredictionRecord::new(item.id, confidence, item.correct))
            })
            .collect(),
    }
}

#[derive(Serialize)]
struct CertifyLine {
    id: String,
    correct: bool,
    outcome: &'static str,
    radius: Option<f64>,
    /// One certificate per requested radius; `null` when the evidence
    /// carries no confidence data for the chosen method.
    bounds: Option<Vec<ConfidenceCertificate>>,
}

fn cmd_certify(args: &CertifyArgs) -> Result<()> {
    if args.io.mode == Some(ModeArg::Precertified) {
        return Err(Error::input(
            "certify derives certificates from raw evidence; precertified \
             records already carry theirs",
        ));
    }
    let mut config = load_config(args.io.config.as_deref())?;
    if let Some(path) = &args.io.input {
        config.input = Some(path.clone());
    }
    if let Some(format) = args.io.format {
        config.format = format.into();
    }
    if let Some(path) = &args.io.output {
        config.output = Some(path.clone());
    }
    if let Some(radii) = &args.radii {
        config.radii = radii.clone();
    }
    if let Some(method) = args.method {
        config.method = method.into();
    }
    if let Some(alpha) = args.alpha {
        config.alpha = Some(alpha);
    }
    if let Some(count) = args.threshold_count {
        config.threshold_count = count;
    }
    config.validate()?;
    let ingested = ingest(required_input(&config)?, config.format, RecordMode::Evidence)?;
    warn_all(&ingested.warnings);
    let IngestData::Evidence(items) = ingested.data else {
        unreachable!("evidence mode yields evidence records")
    };
    let mut lines = String::new();
    for mut item in items {
        if let Some(alpha) = config.alpha {
            item.evidence.alpha = alpha;
        }
        let line = match certified_radius(&item.evidence)? {
            RadiusOutcome::Certified(radius) => CertifyLine {
                id: item.id,
                correct: item.correct,
                outcome: "certified",
                radius: Some(radius),
                bounds: record_bounds(&item.evidence, &config)?,
            },
            RadiusOutcome::Abstain => CertifyLine {
                id: item.id,
                correct: item.correct,
                outcome: "abstain",
                radius: None,
                bounds: None,
            },
        };
        lines.push_str(&serde_json::to_string(&line).expect("line serialization"));
        lines.push('\n');
    }
    deliver(&lines, config.output.as_deref())
}

fn record_bounds(
    evidence: &SmoothingEvidence,
    config: &RunConfig,
) -> Result<Option<Vec<ConfidenceCertificate>>> {
    let available = match config.method {
        CertificateMethod::Standard => evidence.mean_confidence().is_ok(),
        CertificateMethod::Cdf => evidence
            .confidence_samples
            .as_ref()
            .is_some_and(|s| !s.is_empty()),
    };
    if !available {
        return Ok(None);
    }
    config
        .radii
        .iter()
        .map(|&r| evidence_certificate(evidence, config.method, config.threshold_count, r))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let mut config = sweep_config(&args.sweep)?;
    if args.ensemble {
        config.ensemble = true;
    }
    if args.dece {
        config.dece = true;
    }
    if args.oracle {
        config.oracle = true;
    }
    if args.no_admm {
        config.admm_enabled = false;
    }
    if args.traces {
        config.include_traces = true;
    }
    if let Some(path) = &args.plot_output {
        config.plot_output = Some(path.clone());
    }
    run_and_deliver(&config)
}

fn cmd_diagnostics(args: &DiagnosticsArgs) -> Result<()> {
    let mut config = sweep_config(&args.sweep)?;
    config.admm_enabled = true;
    config.dece = false;
    config.oracle = false;
    config.include_traces = true;
    if args.ensemble {
        config.ensemble = true;
    }
    let first = *config
        .radii
        .first()
        .ok_or_else(|| Error::input("at least one radius is required"))?;
    config.radii = vec![first];
    let output = config.output.take();
    let report = run_pipeline(&config)?;
    warn_all(&report.warnings);
    let traces = report.rows[0]
        .traces
        .as_deref()
        .filter(|t| !t.is_empty())
        .ok_or_else(|| {
            Error::Input(format!("no trace recorded at radius {first} (empty subset?)"))
        })?;
    let mut out = String::from(
        "step,lagrangian,relaxed_objective,projected_ece,unique,valid,binary,bounds\n",
    );
    for row in traces {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.step,
            row.lagrangian,
            row.relaxed_objective,
            row.projected_ece,
            row.residuals.unique,
            row.residuals.valid,
            row.residuals.binary,
            row.residuals.bounds,
        ));
    }
    deliver(&out, output.as_deref())
}

fn required_input(config: &RunConfig) -> Result<&Path> {
    config
        .input
        .as_deref()
        .ok_or_else(|| Error::input("no input file (pass --input or set it in the config)"))
}

fn deliver(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => write_text(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn warn_all(warnings: &[String]) {
    for warning in warnings {
        eprintln!("warning: {warning}");
    }
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serialization");
    text.push('\n');
    text
}
