//! Ingestion, radius sweeps, and report emission.
//!
//! A run reads certified predictions (or raw smoothing evidence), and for
//! each requested radius filters to the samples whose certified radius
//! covers it, derives confidence boxes with the chosen certificate, and
//! computes the observed and worst-case calibration metrics. The result is
//! a versioned report plus an optional flat table for plotting. Reports are
//! deterministic: identical config and input produce byte-identical output.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::{
    acce_ensemble, brier_start, evaluation_grid, multi_start_solve, AdmmConfig, SolveReport,
    TraceRow,
};
use crate::brier::certified_brier;
use crate::certify::{
    cdf_bound, certified_radius, dkw_band, hoeffding_bound, standard_bound, uniform_thresholds,
    CertificateMethod, ConfidenceCertificate, Sided, SmoothingEvidence,
};
use crate::dece::{maximize_dece, DeceSchedule};
use crate::error::{Error, Result};
use crate::metrics::{
    compute_adaece, compute_ece, compute_tlbs, reliability_data, BinKind, BinRow, BinningScheme,
};
use crate::mip::{build_instance, natural_point_of, objective};
use crate::oracle::brute_force_cce;
use crate::records::PredictionRecord;

/// Environment variable naming a run-config file used when no explicit path
/// is given.
pub const CONFIG_ENV_VAR: &str = "CALICERT_CONFIG";

/// Current report schema version.
pub const REPORT_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordMode {
    /// Records already carry confidence bounds or the material to derive
    /// them (radius and sigma).
    Precertified,
    /// Raw Monte Carlo smoothing evidence; radii and bounds are derived.
    Evidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinningConfig {
    pub kind: BinKind,
    pub bins: usize,
}

impl Default for BinningConfig {
    fn default() -> Self {
        BinningConfig {
            kind: BinKind::EqualWidth,
            bins: 15,
        }
    }
}

/// Full configuration of a pipeline run. Every field has a default, so a
/// config file may supply any subset; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Input data path. Required by [`run_pipeline`].
    pub input: Option<PathBuf>,
    pub format: InputFormat,
    pub mode: RecordMode,
    pub binning: BinningConfig,
    /// Radii to sweep, sorted ascending, no duplicates.
    pub radii: Vec<f64>,
    /// Certificate construction for evidence-derived bounds.
    pub method: CertificateMethod,
    /// When set, overrides the failure level carried by each evidence
    /// record.
    pub alpha: Option<f64>,
    /// Solver configuration (and the base of the ensemble grid).
    pub admm: AdmmConfig,
    /// Run the solver at all. The report subcommands that do not need the
    /// ACCE switch this off.
    pub admm_enabled: bool,
    /// Replace the single multi-start solve with the 16-run evaluation
    /// grid.
    pub ensemble: bool,
    pub dece: bool,
    pub dece_schedule: DeceSchedule,
    pub oracle: bool,
    /// Keep the winning solver trace on each radius row.
    pub include_traces: bool,
    /// Count abstained samples as incorrect in the certified accuracy
    /// (they are always excluded from the metrics themselves).
    pub count_abstain_as_incorrect: bool,
    /// Interior threshold count for the empirical-CDF certificate.
    pub threshold_count: usize,
    pub output: Option<PathBuf>,
    pub plot_output: Option<PathBuf>,
    /// Echoed into the report; all pipeline stages are deterministic.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            format: InputFormat::Jsonl,
            mode: RecordMode::Precertified,
            binning: BinningConfig::default(),
            radii: vec![0.0],
            method: CertificateMethod::Standard,
            alpha: None,
            admm: AdmmConfig::default(),
            admm_enabled: true,
            ensemble: false,
            dece: false,
            dece_schedule: DeceSchedule::default(),
            oracle: false,
            include_traces: false,
            count_abstain_as_incorrect: false,
            threshold_count: 50,
            output: None,
            plot_output: None,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.binning.bins == 0 {
            return Err(Error::input("bin count must be positive"));
        }
        if self.binning.kind != BinKind::EqualWidth {
            return Err(Error::input(
                "the worst-case search is defined over equal-width bins; \
                 equal-count calibration is reported through the AdaECE column",
            ));
        }
        if self.radii.is_empty() {
            return Err(Error::input("at least one radius is required"));
        }
        for r in &self.radii {
            if !r.is_finite() || *r < 0.0 {
                return Err(Error::Input(format!("radius {r} must be nonnegative")));
            }
        }
        if self.radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input("radii must be sorted ascending without duplicates"));
        }
        if let Some(alpha) = self.alpha {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::Input(format!("alpha {alpha} must be in (0, 1]")));
            }
        }
        if self.threshold_count == 0 {
            return Err(Error::input("threshold count must be positive"));
        }
        self.admm.validate()?;
        self.dece_schedule.validate()?;
        Ok(())
    }
}

/// Resolve and read the run config: an explicit path wins, then the
/// `CALICERT_CONFIG` environment variable, then built-in defaults.
pub fn load_config(explicit: Option<&Path>) -> Result<RunConfig> {
    let path = match explicit {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(CONFIG_ENV_VAR).map(PathBuf::from),
    };
    match path {
        Some(p) => read_config(&p),
        None => Ok(RunConfig::default()),
    }
}

/// Read a JSON run config from disk.
pub fn read_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// One line of raw smoothing evidence: sample identity plus the Monte Carlo
/// statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRecord {
    pub id: String,
    pub correct: bool,
    #[serde(flatten)]
    pub evidence: SmoothingEvidence,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IngestData {
    Precertified(Vec<PredictionRecord>),
    Evidence(Vec<EvidenceRecord>),
}

/// Parsed input plus non-fatal notes (confidence clamps and the like) for
/// the caller to surface.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub data: IngestData,
    pub warnings: Vec<String>,
}

fn open_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = fs::File::open(path)
        .map_err(|e| Error::Input(format!("input {}: {e}", path.display())))?;
    let mut lines = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::Input(format!("input {}: {e}", path.display())))?;
        if !line.trim().is_empty() {
            lines.push((idx + 1, line));
        }
    }
    if lines.is_empty() {
        return Err(Error::Input(format!("input {}: no records", path.display())));
    }
    Ok(lines)
}

fn parse_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    open_lines(path)?
        .into_iter()
        .map(|(line, text)| {
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: path.display().to_string(),
                line,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Column access for one CSV row; all parse failures carry the line number.
struct CsvRow<'a> {
    path: &'a Path,
    line: usize,
    headers: &'a [String],
    fields: Vec<String>,
}

impl CsvRow<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.display().to_string(),
            line: self.line,
            message: message.into(),
        }
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|i| self.fields[i].trim())
            .filter(|s| !s.is_empty())
    }

    fn required(&self, name: &str) -> Result<&str> {
        self.get(name)
            .ok_or_else(|| self.err(format!("missing required column {name}")))
    }

    fn parse_f64(&self, name: &str, raw: &str) -> Result<f64> {
        raw.parse()
            .map_err(|_| self.err(format!("column {name}: {raw} is not a number")))
    }

    fn opt_f64(&self, name: &str) -> Result<Option<f64>> {
        self.get(name).map(|raw| self.parse_f64(name, raw)).transpose()
    }

    fn opt_u64(&self, name: &str) -> Result<Option<u64>> {
        self.get(name)
            .map(|raw| {
                raw.parse()
                    .map_err(|_| self.err(format!("column {name}: {raw} is not a count")))
            })
            .transpose()
    }

    fn required_f64(&self, name: &str) -> Result<f64> {
        let raw = self.required(name)?;
        self.parse_f64(name, raw)
    }

    fn required_u64(&self, name: &str) -> Result<u64> {
        let raw = self.required(name)?;
        raw.parse()
            .map_err(|_| self.err(format!("column {name}: {raw} is not a count")))
    }

    fn required_bool(&self, name: &str) -> Result<bool> {
        match self.required(name)?.to_ascii_lowercase().as_str() {
            "true" | "1" => Ok(true),
            "false" | "0" => Ok(false),
            other => Err(self.err(format!("column {name}: {other} is not a boolean"))),
        }
    }
}

/// Header row plus (line number, cells) for every data row.
type CsvTable = (Vec<String>, Vec<(usize, Vec<String>)>);

fn csv_rows(path: &Path) -> Result<CsvTable> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::Input(format!("input {}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Input(format!("input {}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(rows.len() + 2);
            Error::Parse {
                path: path.display().to_string(),
                line,
                message: e.to_string(),
            }
        })?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(rows.len() + 2);
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    if rows.is_empty() {
        return Err(Error::Input(format!("input {}: no records", path.display())));
    }
    Ok((headers, rows))
}

const PRECERTIFIED_COLUMNS: [&str; 7] =
    ["id", "confidence", "correct", "radius", "lower", "upper", "sigma"];

fn csv_precertified(path: &Path) -> Result<Vec<PredictionRecord>> {
    let (headers, rows) = csv_rows(path)?;
    rows.into_iter()
        .map(|(line, fields)| {
            let row = CsvRow { path, line, headers: &headers, fields };
            let mut record = PredictionRecord::new(
                row.required("id")?,
                row.required_f64("confidence")?,
                row.required_bool("correct")?,
            );
            record.radius = row.opt_f64("radius")?;
            record.lower = row.opt_f64("lower")?;
            record.upper = row.opt_f64("upper")?;
            record.sigma = row.opt_f64("sigma")?;
            for (header, field) in headers.iter().zip(&row.fields) {
                if PRECERTIFIED_COLUMNS.contains(&header.as_str()) || field.trim().is_empty() {
                    continue;
                }
                record.extra.insert(header.clone(), csv_value(field.trim()));
            }
            Ok(record)
        })
        .collect()
}

/// Preserve extra CSV cells with their natural JSON type.
fn csv_value(raw: &str) -> serde_json::Value {
    if let Ok(b) = raw.parse::<bool>() {
        return serde_json::Value::Bool(b);
    }
    if let Ok(n) = raw.parse::<f64>() {
        if let Some(number) = serde_json::Number::from_f64(n) {
            return serde_json::Value::Number(number);
        }
    }
    serde_json::Value::String(raw.to_string())
}

fn csv_evidence(path: &Path) -> Result<Vec<EvidenceRecord>> {
    let (headers, rows) = csv_rows(path)?;
    rows.into_iter()
        .map(|(line, fields)| {
            let row = CsvRow { path, line, headers: &headers, fields };
            let confidence_samples = row
                .get("confidence_samples")
                .map(|raw| {
                    raw.split(';')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| row.parse_f64("confidence_samples", s.trim()))
                        .collect::<Result<Vec<f64>>>()
                })
                .transpose()?;
            Ok(EvidenceRecord {
                id: row.required("id")?.to_string(),
                correct: row.required_bool("correct")?,
                evidence: SmoothingEvidence {
                    n_samples: row.required_u64("n_samples")?,
                    sigma: row.required_f64("sigma")?,
                    alpha: row.required_f64("alpha")?,
                    top_count: row.required_u64("top_count")?,
                    runner_count: row.opt_u64("runner_count")?,
                    mean_top_confidence: row.opt_f64("mean_top_confidence")?,
                    confidence_samples,
                },
            })
        })
        .collect()
}

/// Read and validate input records. Precertified records are sanitized in
/// place (float noise clamped into [0, 1], anything further out rejected);
/// each clamp is reported as a warning. Evidence records are validated
/// against their own consistency rules.
pub fn ingest(path: &Path, format: InputFormat, mode: RecordMode) -> Result<Ingested> {
    let mut warnings = Vec::new();
    let data = match mode {
        RecordMode::Precertified => {
            let mut records: Vec<PredictionRecord> = match format {
                InputFormat::Jsonl => parse_jsonl(path)?,
                InputFormat::Csv => csv_precertified(path)?,
            };
            for record in &mut records {
                let before = (record.confidence, record.lower, record.upper);
                record.sanitize()?;
                if (record.confidence, record.lower, record.upper) != before {
                    warnings.push(format!(
                        "record {}: confidence values clamped into [0, 1]",
                        record.id
                    ));
                }
            }
            IngestData::Precertified(records)
        }
        RecordMode::Evidence => {
            let records: Vec<EvidenceRecord> = match format {
                InputFormat::Jsonl => parse_jsonl(path)?,
                InputFormat::Csv => csv_evidence(path)?,
            };
            for record in &records {
                record.evidence.validate().map_err(|e| {
                    Error::Input(format!("record {}: {e}", record.id))
                })?;
            }
            IngestData::Evidence(records)
        }
    };
    Ok(Ingested { data, warnings })
}

/// One sample ready for sweeping: the base record (confidence, correctness,
/// certified radius) plus its evidence when bounds are derived per radius.
#[derive(Debug, Clone)]
struct SweepSample {
    record: PredictionRecord,
    evidence: Option<SmoothingEvidence>,
}

/// Samples that can enter a sweep, plus the abstention count.
struct SweepSet {
    samples: Vec<SweepSample>,
    abstained: usize,
}

fn prepare_samples(data: IngestData, config: &RunConfig) -> Result<SweepSet> {
    match data {
        IngestData::Precertified(records) => Ok(SweepSet {
            samples: records
                .into_iter()
                .map(|record| SweepSample { record, evidence: None })
                .collect(),
            abstained: 0,
        }),
        IngestData::Evidence(records) => {
            let mut samples = Vec::with_capacity(records.len());
            let mut abstained = 0;
            for mut item in records {
                if let Some(alpha) = config.alpha {
                    item.evidence.alpha = alpha;
                }
                let Some(radius) = certified_radius(&item.evidence)?.radius() else {
                    abstained += 1;
                    continue;
                };
                let confidence = item.evidence.mean_confidence().map_err(|e| {
                    Error::Input(format!("record {}: {e}", item.id))
                })?;
                let mut record = PredictionRecord::new(item.id, confidence, item.correct);
                record.radius = Some(radius);
                record.sigma = Some(item.evidence.sigma);
                samples.push(SweepSample { record, evidence: Some(item.evidence) });
            }
            Ok(SweepSet { samples, abstained })
        }
    }
}

/// Certificate for one evidence record at one radius: a two-sided Hoeffding
/// interval on the mean confidence widened by the standard construction, or
/// a DKW band pushed through the CDF construction over `threshold_count`
/// uniform thresholds.
pub fn evidence_certificate(
    evidence: &SmoothingEvidence,
    method: CertificateMethod,
    threshold_count: usize,
    radius: f64,
) -> Result<ConfidenceCertificate> {
    match method {
        CertificateMethod::Standard => {
            let mean = evidence.mean_confidence()?;
            let (lo, hi) = hoeffding_bound(mean, evidence.n_samples, evidence.alpha, Sided::Two)?;
            standard_bound(lo, hi, radius, evidence.sigma)
        }
        CertificateMethod::Cdf => {
            let samples = evidence.confidence_samples.as_ref().ok_or_else(|| {
                Error::input("the cdf certificate needs raw confidence samples")
            })?;
            let band = dkw_band(samples, evidence.alpha, &uniform_thresholds(threshold_count))?;
            cdf_bound(&band, radius, evidence.sigma)
        }
    }
}

/// Confidence box for one sample at one radius.
///
/// Evidence samples go through the configured certificate (a two-sided
/// Hoeffding interval on the mean confidence widened by the standard
/// construction, or a DKW band through the CDF construction). Precertified
/// samples with a sigma widen their base interval (explicit bounds if
/// given, else the point at the clean confidence) by the standard
/// construction; without a sigma, explicit bounds are taken as given at
/// every radius, and bare records are usable only at radius zero.
fn bounds_at(sample: &SweepSample, radius: f64, config: &RunConfig) -> Result<(f64, f64)> {
    let record = &sample.record;
    if let Some(evidence) = &sample.evidence {
        let cert = evidence_certificate(evidence, config.method, config.threshold_count, radius)
            .map_err(|e| Error::Input(format!("record {}: {e}", record.id)))?;
        return Ok((cert.lower, cert.upper));
    }
    let base = match (record.lower, record.upper) {
        (Some(l), Some(u)) => (l, u),
        _ => (record.confidence, record.confidence),
    };
    if let Some(sigma) = record.sigma {
        let cert = standard_bound(base.0, base.1, radius, sigma)?;
        return Ok((cert.lower, cert.upper));
    }
    if record.lower.is_some() || radius == 0.0 {
        return Ok(base);
    }
    Err(Error::Input(format!(
        "record {}: cannot bound the confidence at radius {radius} \
         (no explicit bounds and no sigma)",
        record.id
    )))
}

/// Metrics at one radius. Fields are `null` (never omitted) when the
/// certified subset is empty or a metric is not applicable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusRow {
    pub radius: f64,
    /// Samples whose certified radius covers this radius.
    pub certified_count: usize,
    /// Certified count over all ingested samples (abstentions included).
    pub certified_fraction: f64,
    pub certified_accuracy: Option<f64>,
    pub ece: Option<f64>,
    pub adaece: Option<f64>,
    pub tlbs: Option<f64>,
    pub cbs: Option<f64>,
    pub acce_admm: Option<f64>,
    pub acce_dece: Option<f64>,
    /// Hard ECE of the worst-case Brier confidences.
    pub brier_ece: Option<f64>,
    pub oracle_cce: Option<f64>,
    pub mean_width: Option<f64>,
    pub admm_converged: Option<bool>,
    pub admm_steps: Option<usize>,
    pub traces: Option<Vec<TraceRow>>,
}

fn empty_row(radius: f64, config: &RunConfig) -> RadiusRow {
    RadiusRow {
        radius,
        certified_count: 0,
        certified_fraction: 0.0,
        certified_accuracy: config.count_abstain_as_incorrect.then_some(0.0),
        ece: None,
        adaece: None,
        tlbs: None,
        cbs: None,
        acce_admm: None,
        acce_dece: None,
        brier_ece: None,
        oracle_cce: None,
        mean_width: None,
        admm_converged: None,
        admm_steps: None,
        traces: None,
    }
}

fn solve_acce(instance: &crate::mip::MipInstance, config: &RunConfig) -> Result<SolveReport> {
    if config.ensemble {
        acce_ensemble(instance, &evaluation_grid(&config.admm))
    } else {
        multi_start_solve(instance, &config.admm)
    }
}

fn radius_row(sweep: &SweepSet, radius: f64, config: &RunConfig) -> Result<RadiusRow> {
    let total = sweep.samples.len() + sweep.abstained;
    let certified: Vec<&SweepSample> = sweep
        .samples
        .iter()
        .filter(|s| s.record.radius.unwrap_or(0.0) >= radius)
        .collect();
    if certified.is_empty() {
        return Ok(empty_row(radius, config));
    }
    let mut bounded = Vec::with_capacity(certified.len());
    for sample in &certified {
        let (lower, upper) = bounds_at(sample, radius, config)?;
        bounded.push(sample.record.clone().with_bounds(lower, upper));
    }
    let scheme = BinningScheme::equal_width(config.binning.bins)?;
    let correct = bounded.iter().filter(|r| r.correct).count();
    let accuracy_denominator = if config.count_abstain_as_incorrect {
        total
    } else {
        bounded.len()
    };
    let instance = build_instance(&bounded, &scheme)?;
    let admm_report = if config.admm_enabled {
        Some(solve_acce(&instance, config)?)
    } else {
        None
    };
    let acce_dece = if config.dece {
        Some(maximize_dece(&bounded, &scheme, &config.dece_schedule)?.best_hard_ece)
    } else {
        None
    };
    let oracle_cce = if config.oracle {
        Some(brute_force_cce(&instance)?.0)
    } else {
        None
    };
    let brier_point = natural_point_of(&instance, &brier_start(&instance));
    let adaece = if bounded.len() >= config.binning.bins {
        Some(compute_adaece(&bounded, config.binning.bins)?.ece)
    } else {
        None
    };
    Ok(RadiusRow {
        radius,
        certified_count: bounded.len(),
        certified_fraction: bounded.len() as f64 / total as f64,
        certified_accuracy: Some(correct as f64 / accuracy_denominator as f64),
        ece: Some(compute_ece(&bounded, &scheme)?.ece),
        adaece,
        tlbs: Some(compute_tlbs(&bounded)?),
        cbs: Some(certified_brier(&bounded)?),
        acce_admm: admm_report.as_ref().map(|r| r.best_acce),
        acce_dece,
        brier_ece: Some(objective(&instance, &brier_point)?),
        oracle_cce,
        mean_width: Some(
            bounded
                .iter()
                .map(|r| r.upper.unwrap() - r.lower.unwrap())
                .sum::<f64>()
                / bounded.len() as f64,
        ),
        admm_converged: admm_report.as_ref().map(|r| r.converged),
        admm_steps: admm_report.as_ref().map(|r| r.steps_run),
        traces: admm_report
            .filter(|_| config.include_traces)
            .map(|r| r.traces),
    })
}

/// The versioned output of a run: config echo, clean reliability rows, and
/// one metrics row per swept radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedReport {
    pub version: String,
    pub config: RunConfig,
    pub total_records: usize,
    pub abstained: usize,
    /// Non-fatal ingest notes (confidence clamps and the like).
    pub warnings: Vec<String>,
    /// Reliability-diagram rows of the clean (unperturbed) confidences.
    pub reliability: Vec<BinRow>,
    pub rows: Vec<RadiusRow>,
}

/// Run the full sweep described by `config`.
///
/// For each radius, the samples whose certified radius covers it are given
/// confidence boxes by the configured certificate and all enabled metrics
/// are computed on that subset. A radius no sample reaches yields an empty
/// row, not an error. Radius rows are computed concurrently; their order in
/// the report matches the config.
pub fn run_pipeline(config: &RunConfig) -> Result<CertifiedReport> {
    config.validate()?;
    let input = config
        .input
        .as_deref()
        .ok_or_else(|| Error::input("config names no input file"))?;
    let ingested = ingest(input, config.format, config.mode)?;
    let sweep = prepare_samples(ingested.data, config)?;
    let reliability = if sweep.samples.is_empty() {
        Vec::new()
    } else {
        let clean: Vec<PredictionRecord> =
            sweep.samples.iter().map(|s| s.record.clone()).collect();
        let scheme = BinningScheme::equal_width(config.binning.bins)?;
        reliability_data(&clean, &scheme)?.rows
    };
    let rows: Vec<RadiusRow> = config
        .radii
        .par_iter()
        .map(|&radius| radius_row(&sweep, radius, config))
        .collect::<Result<_>>()?;
    Ok(CertifiedReport {
        version: REPORT_VERSION.to_string(),
        config: config.clone(),
        total_records: sweep.samples.len() + sweep.abstained,
        abstained: sweep.abstained,
        warnings: ingested.warnings,
        reliability,
        rows,
    })
}

/// Write text to `path` atomically (write to a temp file, then rename).
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomically(path, text.as_bytes())
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let wrap = |e: std::io::Error| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    };
    fs::write(&tmp, bytes).map_err(wrap)?;
    fs::rename(&tmp, path).map_err(wrap)?;
    Ok(())
}

/// Serialize a report as pretty JSON.
pub fn report_json(report: &CertifiedReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serialization");
    text.push('\n');
    text
}

/// Write the report as JSON, atomically (write to a temp file, then
/// rename).
pub fn emit_report(report: &CertifiedReport, path: &Path) -> Result<()> {
    write_atomically(path, report_json(report).as_bytes())
}

/// Read back a report written by [`emit_report`].
pub fn read_report(path: &Path) -> Result<CertifiedReport> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("report {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// One flat plot-table entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub radius: f64,
    pub metric: String,
    /// Empty cell in the CSV when the radius row was empty.
    pub value: Option<f64>,
    pub method: String,
}

/// Flatten a report into plot rows: per radius, one row per enabled metric.
/// Worst-case ECE approximations share the metric name `acce` and differ in
/// the `method` column.
pub fn plot_rows(report: &CertifiedReport) -> Vec<PlotRow> {
    let mut out = Vec::new();
    for row in &report.rows {
        let mut push = |metric: &str, value: Option<f64>, method: &str| {
            out.push(PlotRow {
                radius: row.radius,
                metric: metric.to_string(),
                value,
                method: method.to_string(),
            });
        };
        push("certified_fraction", Some(row.certified_fraction), "observed");
        push("certified_accuracy", row.certified_accuracy, "observed");
        push("ece", row.ece, "observed");
        push("adaece", row.adaece, "observed");
        push("tlbs", row.tlbs, "observed");
        push("mean_width", row.mean_width, "observed");
        push("cbs", row.cbs, "worst-case");
        if report.config.admm_enabled {
            push("acce", row.acce_admm, "admm");
        }
        push("acce", row.brier_ece, "brier");
        if report.config.dece {
            push("acce", row.acce_dece, "dece");
        }
        if report.config.oracle {
            push("acce", row.oracle_cce, "oracle");
        }
    }
    out
}

/// Serialize the plot table as CSV with header `radius,metric,value,method`.
pub fn plot_csv(report: &CertifiedReport) -> String {
    let mut out = String::from("radius,metric,value,method\n");
    for row in plot_rows(report) {
        let value = row.value.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.radius, row.metric, value, row.method
        ));
    }
    out
}

/// Write the plot table, atomically.
pub fn emit_plot_csv(report: &CertifiedReport, path: &Path) -> Result<()> {
    write_atomically(path, plot_csv(report).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::io::Write;

    fn fixture(name: &str) -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("tests/fixtures")
            .join(name)
    }

    fn temp_file(dir: &tempfile::TempDir, name: &str, content: &str) -> PathBuf {
        let path = dir.path().join(name);
        let mut file = fs::File::create(&path).unwrap();
        file.write_all(content.as_bytes()).unwrap();
        path
    }

    fn base_config(input: PathBuf) -> RunConfig {
        RunConfig {
            input: Some(input),
            ..RunConfig::default()
        }
    }

    #[test]
    fn two_sample_fixture_ingests_and_builds() {
        let ingested = ingest(
            &fixture("two_sample.jsonl"),
            InputFormat::Jsonl,
            RecordMode::Precertified,
        )
        .unwrap();
        let IngestData::Precertified(records) = ingested.data else {
            panic!("expected precertified records");
        };
        assert_eq!(records.len(), 2);
        assert!(ingested.warnings.is_empty());
        let scheme = BinningScheme::equal_width(3).unwrap();
        build_instance(&records, &scheme).unwrap();
    }

    #[test]
    fn empty_input_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = temp_file(&dir, "empty.jsonl", "\n  \n");
        let err = ingest(&path, InputFormat::Jsonl, RecordMode::Precertified);
        assert!(matches!(err, Err(Error::Input(_))), "{err:?}");
    }

    #[test]
    fn float_noise_clamps_with_warning_but_garbage_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let noisy = temp_file(
            &dir,
            "noisy.jsonl",
            r#"{"id": "a", "confidence": 1.0000000001, "correct": true}"#,
        );
        let ingested =
            ingest(&noisy, InputFormat::Jsonl, RecordMode::Precertified).unwrap();
        let IngestData::Precertified(records) = ingested.data else {
            panic!("expected records");
        };
        assert_eq!(records[0].confidence, 1.0);
        assert_eq!(ingested.warnings.len(), 1);

        let garbage = temp_file(
            &dir,
            "garbage.jsonl",
            r#"{"id": "a", "confidence": 1.1, "correct": true}"#,
        );
        let err = ingest(&garbage, InputFormat::Jsonl, RecordMode::Precertified);
        assert!(matches!(err, Err(Error::Input(_))), "{err:?}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = temp_file(
            &dir,
            "broken.jsonl",
            "{\"id\": \"a\", \"confidence\": 0.5, \"correct\": true}\nnot json\n",
        );
        match ingest(&path, InputFormat::Jsonl, RecordMode::Precertified) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn csv_round_trips_against_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let path = temp_file(
            &dir,
            "records.csv",
            "id,confidence,correct,lower,upper,note\n\
             s1,0.25,true,0.1,0.6,keep\n\
             s2,0.8,false,0.5,0.9,\n",
        );
        let ingested = ingest(&path, InputFormat::Csv, RecordMode::Precertified).unwrap();
        let IngestData::Precertified(records) = ingested.data else {
            panic!("expected records");
        };
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].lower, Some(0.1));
        assert_eq!(records[0].extra["note"], serde_json::Value::String("keep".into()));
        assert!(records[1].extra.is_empty());
        assert_eq!(records[1].confidence, 0.8);
    }

    #[test]
    fn evidence_csv_parses_sample_lists() {
        let dir = tempfile::tempdir().unwrap();
        let path = temp_file(
            &dir,
            "evidence.csv",
            "id,correct,n_samples,sigma,alpha,top_count,confidence_samples\n\
             e1,true,4,0.25,0.01,4,0.9;0.8;0.85;0.95\n",
        );
        let ingested = ingest(&path, InputFormat::Csv, RecordMode::Evidence).unwrap();
        let IngestData::Evidence(records) = ingested.data else {
            panic!("expected evidence");
        };
        assert_eq!(records[0].evidence.confidence_samples.as_ref().unwrap().len(), 4);
        assert_eq!(records[0].evidence.top_count, 4);
    }

    #[test]
    fn degenerate_boxes_collapse_worst_case_to_observed() {
        let dir = tempfile::tempdir().unwrap();
        let path = temp_file(
            &dir,
            "points.jsonl",
            r#"{"id": "a", "confidence": 0.3, "correct": true, "lower": 0.3, "upper": 0.3}
{"id": "b", "confidence": 0.7, "correct": false, "lower": 0.7, "upper": 0.7}
{"id": "c", "confidence": 0.9, "correct": true, "lower": 0.9, "upper": 0.9}"#,
        );
        let config = RunConfig {
            binning: BinningConfig { kind: BinKind::EqualWidth, bins: 4 },
            ..base_config(path)
        };
        let report = run_pipeline(&config).unwrap();
        let row = &report.rows[0];
        assert_eq!(row.cbs.unwrap(), row.tlbs.unwrap());
        // The observed ECE rounds through per-bin means, hence the slack.
        assert!(
            (row.acce_admm.unwrap() - row.ece.unwrap()).abs() < 1e-12,
            "acce {} vs ece {}",
            row.acce_admm.unwrap(),
            row.ece.unwrap()
        );
        assert_eq!(row.mean_width.unwrap(), 0.0);
    }

    #[test]
    fn worked_fixture_yields_the_known_numbers() {
        let config = RunConfig {
            binning: BinningConfig { kind: BinKind::EqualWidth, bins: 3 },
            oracle: true,
            dece: true,
            ..base_config(fixture("two_sample.jsonl"))
        };
        let report = run_pipeline(&config).unwrap();
        let row = &report.rows[0];
        assert!((row.cbs.unwrap() - 0.81).abs() < 1e-12, "cbs {:?}", row.cbs);
        assert!((row.acce_admm.unwrap() - 0.9).abs() < 1e-3, "acce {:?}", row.acce_admm);
        assert_eq!(row.oracle_cce.unwrap(), 0.9);
        assert!((row.acce_dece.unwrap() - 0.9).abs() < 1e-3, "dece {:?}", row.acce_dece);
        assert_eq!(row.certified_count, 2);
        assert_eq!(report.total_records, 2);
    }

    /// Synthetic smoothing-shaped records: clustered confidences, sigma set,
    /// huge certified radius so every sample survives every filter.
    fn calibrated_records(rng: &mut ChaCha8Rng, n: usize) -> String {
        let mut out = String::new();
        for i in 0..n {
            let conf: f64 = 0.55 + 0.44 * rng.gen::<f64>();
            let correct = rng.gen::<f64>() < conf;
            out.push_str(&format!(
                "{{\"id\": \"g{i}\", \"confidence\": {conf}, \"correct\": {correct}, \
                 \"radius\": 10.0, \"sigma\": 0.25}}\n"
            ));
        }
        out
    }

    #[test]
    fn acce_and_cbs_are_nondecreasing_in_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(90);
        let dir = tempfile::tempdir().unwrap();
        let path = temp_file(&dir, "sweep.jsonl", &calibrated_records(&mut rng, 30));
        let config = RunConfig {
            radii: vec![0.0, 0.1, 0.25],
            ensemble: true,
            ..base_config(path)
        };
        let report = run_pipeline(&config).unwrap();
        assert_eq!(report.rows.len(), 3);
        for pair in report.rows.windows(2) {
            assert!(
                pair[1].acce_admm.unwrap() >= pair[0].acce_admm.unwrap() - 1e-9,
                "acce dipped: {:?} then {:?}",
                pair[0].acce_admm,
                pair[1].acce_admm
            );
            assert!(
                pair[1].cbs.unwrap() >= pair[0].cbs.unwrap() - 1e-12,
                "cbs dipped"
            );
            assert!(
                pair[1].mean_width.unwrap() >= pair[0].mean_width.unwrap() - 1e-12,
                "width dipped"
            );
        }
        // Worst case dominates observed on every row.
        for row in &report.rows {
            assert!(row.cbs.unwrap() >= row.tlbs.unwrap() - 1e-12);
            assert!(row.acce_admm.unwrap() >= row.ece.unwrap() - 1e-9);
            assert!(row.acce_admm.unwrap() >= row.brier_ece.unwrap() - 1e-9);
        }
    }

    #[test]
    fn certified_count_never_increases_with_radius() {
        let dir = tempfile::tempdir().unwrap();
        let mut lines = String::new();
        for (i, radius) in [0.0, 0.1, 0.2, 0.5, 1.0].iter().enumerate() {
            lines.push_str(&format!(
                "{{\"id\": \"r{i}\", \"confidence\": 0.8, \"correct\": true, \
                 \"radius\": {radius}, \"sigma\": 0.5}}\n"
            ));
        }
        let path = temp_file(&dir, "radii.jsonl", &lines);
        let config = RunConfig {
            radii: vec![0.0, 0.15, 0.3, 0.7, 2.0],
            admm_enabled: false,
            ..base_config(path)
        };
        let report = run_pipeline(&config).unwrap();
        let counts: Vec<usize> = report.rows.iter().map(|r| r.certified_count).collect();
        assert_eq!(counts, vec![5, 3, 2, 1, 0]);
        let empty = &report.rows[4];
        assert_eq!(empty.ece, None);
        assert_eq!(empty.certified_fraction, 0.0);
        // Schema stability: empty rows keep explicit nulls.
        let json = serde_json::to_value(empty).unwrap();
        assert!(json.get("ece").unwrap().is_null());
        assert!(json.get("cbs").unwrap().is_null());
    }

    #[test]
    fn evidence_mode_certifies_and_bounds() {
        let dir = tempfile::tempdir().unwrap();
        let mut lines = String::new();
        // Strong evidence: certifiable, tight bounds. Weak evidence:
        // abstains (runner-up indistinguishable).
        lines.push_str(
            r#"{"id": "strong", "correct": true, "n_samples": 1000, "sigma": 0.25, "alpha": 0.001, "top_count": 990, "mean_top_confidence": 0.93}"#,
        );
        lines.push('\n');
        lines.push_str(
            r#"{"id": "weak", "correct": false, "n_samples": 20, "sigma": 0.25, "alpha": 0.001, "top_count": 11, "mean_top_confidence": 0.55}"#,
        );
        lines.push('\n');
        let path = temp_file(&dir, "evidence.jsonl", &lines);
        let config = RunConfig {
            mode: RecordMode::Evidence,
            radii: vec![0.0, 0.1],
            admm_enabled: false,
            ..base_config(path)
        };
        let report = run_pipeline(&config).unwrap();
        assert_eq!(report.total_records, 2);
        assert_eq!(report.abstained, 1);
        let row = &report.rows[0];
        assert_eq!(row.certified_count, 1);
        assert_eq!(row.certified_fraction, 0.5);
        assert_eq!(row.certified_accuracy, Some(1.0));
        assert!(row.mean_width.unwrap() > 0.0);
        // Wider at the larger radius.
        assert!(report.rows[1].mean_width.unwrap() > row.mean_width.unwrap());

        let strict = RunConfig {
            count_abstain_as_incorrect: true,
            ..config
        };
        let report = run_pipeline(&strict).unwrap();
        assert_eq!(report.rows[0].certified_accuracy, Some(0.5));
    }

    #[test]
    fn reports_round_trip_and_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig {
            binning: BinningConfig { kind: BinKind::EqualWidth, bins: 3 },
            dece: true,
            include_traces: true,
            ..base_config(fixture("two_sample.jsonl"))
        };
        let report = run_pipeline(&config).unwrap();
        let path = dir.path().join("report.json");
        emit_report(&report, &path).unwrap();
        let back = read_report(&path).unwrap();
        assert_eq!(back, report);

        let again = run_pipeline(&config).unwrap();
        assert_eq!(report_json(&again), report_json(&report));
        let other = dir.path().join("other.json");
        emit_report(&again, &other).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&other).unwrap());
        assert!(!report.rows[0].traces.as_ref().unwrap().is_empty());
    }

    #[test]
    fn plot_table_counts_radii_times_methods() {
        let config = RunConfig {
            binning: BinningConfig { kind: BinKind::EqualWidth, bins: 3 },
            dece: true,
            oracle: true,
            ..base_config(fixture("two_sample.jsonl"))
        };
        let report = run_pipeline(&config).unwrap();
        let rows = plot_rows(&report);
        // 7 observed/closed-form metrics + admm + brier + dece + oracle.
        assert_eq!(rows.len(), report.rows.len() * 11);
        let csv = plot_csv(&report);
        assert!(csv.starts_with("radius,metric,value,method\n"));
        assert_eq!(csv.lines().count(), rows.len() + 1);
    }

    #[test]
    fn config_validation_rejects_bad_sweeps() {
        let mut config = RunConfig {
            radii: vec![0.5, 0.25],
            ..RunConfig::default()
        };
        assert!(config.validate().is_err(), "unsorted radii");
        config.radii = vec![0.25, 0.25];
        assert!(config.validate().is_err(), "duplicate radii");
        config.radii = vec![-0.1];
        assert!(config.validate().is_err(), "negative radius");
        config.radii = vec![0.0];
        config.binning.kind = BinKind::EqualCount;
        assert!(config.validate().is_err(), "equal-count worst case");
        config.binning.kind = BinKind::EqualWidth;
        config.alpha = Some(0.0);
        assert!(config.validate().is_err(), "alpha outside (0, 1]");
        config.alpha = None;
        assert!(config.validate().is_ok());
    }

    #[test]
    fn config_loads_from_explicit_path_and_env() {
        let dir = tempfile::tempdir().unwrap();
        let path = temp_file(
            &dir,
            "config.json",
            r#"{"radii": [0.0, 0.5], "ensemble": true, "admm": {"max_steps": 100}}"#,
        );
        let config = load_config(Some(&path)).unwrap();
        assert_eq!(config.radii, vec![0.0, 0.5]);
        assert!(config.ensemble);
        assert_eq!(config.admm.max_steps, 100);
        // Untouched fields keep their defaults.
        assert_eq!(config.binning.bins, 15);

        std::env::set_var(CONFIG_ENV_VAR, &path);
        let config = load_config(None).unwrap();
        std::env::remove_var(CONFIG_ENV_VAR);
        assert_eq!(config.radii, vec![0.0, 0.5]);

        let unknown = temp_file(&dir, "bad.json", r#"{"radis": [0.0]}"#);
        assert!(load_config(Some(&unknown)).is_err(), "unknown key");
    }

    #[test]
    fn bare_records_are_rejected_beyond_radius_zero() {
        let dir = tempfile::tempdir().unwrap();
        let path = temp_file(
            &dir,
            "bare.jsonl",
            r#"{"id": "a", "confidence": 0.5, "correct": true, "radius": 1.0}"#,
        );
        let config = RunConfig {
            radii: vec![0.0, 0.5],
            admm_enabled: false,
            ..base_config(path)
        };
        let err = run_pipeline(&config);
        assert!(matches!(err, Err(Error::Input(_))), "{err:?}");
    }
}
