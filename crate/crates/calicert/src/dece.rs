//! Soft-binning calibration error and a gradient-ascent worst-case baseline.
//!
//! The hard bin indicator in the ECE is replaced by a tempered softmax over
//! bins, which makes the error differentiable in the confidences. With the
//! correctness flags fixed (certified predictions cannot change label inside
//! their radius), that is the only non-differentiable piece, so projected
//! gradient ascent over the confidence boxes gives a worst-case baseline.
//! The ascent anneals the temperature from smooth to nearly hard and reports
//! the best hard-binned error seen along the way, which is always attained
//! by a feasible point and therefore never exceeds the true worst case.

use serde::{Deserialize, Serialize};

use crate::admm::{brier_start, ZInit};
use crate::error::{Error, Result};
use crate::metrics::BinningScheme;
use crate::mip::{build_instance, natural_point_of, objective, MipInstance};
use crate::records::PredictionRecord;

/// Soft assignment of confidences to bins through a tempered softmax.
///
/// For cutoffs `beta_1 < ... < beta_{M-1}` the logits are
/// `(m * z + b_m) / tau` with `b_m = -sum of the first m-1 cutoffs`; the
/// logit difference between bins `m+1` and `m` is `(z - beta_m) / tau`, so
/// as `tau -> 0` the softmax row tends to the one-hot vector of the hard bin
/// whenever `z` is not exactly on a cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftBinning {
    pub bins: usize,
    /// Bin weights `[1, 2, ..., M]`.
    pub weights: Vec<f64>,
    /// Offsets `b_m`, negated prefix sums of the cutoffs.
    pub offsets: Vec<f64>,
    pub temperature: f64,
}

impl SoftBinning {
    /// Soft partition with `bins` equal-width bins (cutoffs at `i / bins`).
    pub fn equal_width(bins: usize, temperature: f64) -> Result<Self> {
        if bins == 0 {
            return Err(Error::input("bin count must be positive"));
        }
        let cutoffs: Vec<f64> = (1..bins).map(|i| i as f64 / bins as f64).collect();
        Self::from_cutoffs(&cutoffs, temperature)
    }

    /// Soft partition with the given interior cutoffs (ascending, inside
    /// (0, 1)); the bin count is one more than the cutoff count.
    pub fn from_cutoffs(cutoffs: &[f64], temperature: f64) -> Result<Self> {
        if !temperature.is_finite() || temperature <= 0.0 {
            return Err(Error::Input(format!(
                "temperature {temperature} must be positive and finite"
            )));
        }
        for pair in cutoffs.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::Input(format!(
                    "cutoffs must be strictly ascending, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        if cutoffs.iter().any(|b| !(0.0..=1.0).contains(b)) {
            return Err(Error::input("cutoffs must lie inside [0, 1]"));
        }
        let bins = cutoffs.len() + 1;
        let weights = (1..=bins).map(|m| m as f64).collect();
        let mut offsets = Vec::with_capacity(bins);
        let mut acc = 0.0;
        offsets.push(0.0);
        for cutoff in cutoffs {
            acc -= cutoff;
            offsets.push(acc);
        }
        Ok(SoftBinning {
            bins,
            weights,
            offsets,
            temperature,
        })
    }

    /// The soft counterpart of an edge-based binning scheme.
    pub fn from_scheme(scheme: &BinningScheme, temperature: f64) -> Result<Self> {
        Self::from_cutoffs(&scheme.edges[1..scheme.bin_count], temperature)
    }

    pub fn with_temperature(&self, temperature: f64) -> Result<Self> {
        if !temperature.is_finite() || temperature <= 0.0 {
            return Err(Error::Input(format!(
                "temperature {temperature} must be positive and finite"
            )));
        }
        Ok(SoftBinning {
            temperature,
            ..self.clone()
        })
    }

    /// Softmax row `s(z)`: max-subtracted, so extreme logits at low
    /// temperature underflow to exact zeros instead of overflowing.
    pub fn soft_assignment(&self, z: f64) -> Vec<f64> {
        let mut logits: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.offsets)
            .map(|(w, b)| (w * z + b) / self.temperature)
            .collect();
        let top = logits.iter().fold(f64::NEG_INFINITY, |acc, &l| acc.max(l));
        let mut sum = 0.0;
        for logit in &mut logits {
            *logit = (*logit - top).exp();
            sum += *logit;
        }
        for logit in &mut logits {
            *logit /= sum;
        }
        logits
    }
}

fn check_inputs(z: &[f64], correctness: &[f64]) -> Result<()> {
    if z.len() != correctness.len() {
        return Err(Error::Input(format!(
            "{} confidences vs {} correctness flags",
            z.len(),
            correctness.len()
        )));
    }
    if z.is_empty() {
        return Err(Error::input("no samples"));
    }
    for (n, &value) in z.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Input(format!(
                "confidence {value} at index {n} is outside [0, 1]"
            )));
        }
    }
    for (n, &c) in correctness.iter().enumerate() {
        if c != 0.0 && c != 1.0 {
            return Err(Error::Input(format!(
                "correctness {c} at index {n} is not 0 or 1"
            )));
        }
    }
    Ok(())
}

/// Absolute bin sums of the soft assignment: `sum_m |sum_n s[n,m] e_n| / N`
/// with `e_n = c_n - z_n`. Tends to the hard equal-width ECE as the
/// temperature goes to zero.
pub fn dece_value(z: &[f64], correctness: &[f64], binning: &SoftBinning) -> Result<f64> {
    check_inputs(z, correctness)?;
    let mut bin_sums = vec![0.0; binning.bins];
    for (&zn, &cn) in z.iter().zip(correctness) {
        let row = binning.soft_assignment(zn);
        let e = cn - zn;
        for (sum, s) in bin_sums.iter_mut().zip(&row) {
            *sum += s * e;
        }
    }
    Ok(bin_sums.iter().map(|t| t.abs()).sum::<f64>() / z.len() as f64)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Exact gradient of [`dece_value`] in the confidences.
///
/// Per sample `k` and bin `m` the chain rule gives two pieces: the softmax
/// Jacobian `s[k,m] (w_m - <s_k, w>) / tau` times the error `e_k`, and the
/// direct `-s[k,m]` from `e_k = c_k - z_k`; both are weighted by the sign of
/// the bin sum, taken as 0 on the kink.
pub fn dece_gradient(z: &[f64], correctness: &[f64], binning: &SoftBinning) -> Result<Vec<f64>> {
    check_inputs(z, correctness)?;
    let samples = z.len();
    let mut rows = Vec::with_capacity(samples);
    let mut bin_sums = vec![0.0; binning.bins];
    for (&zn, &cn) in z.iter().zip(correctness) {
        let row = binning.soft_assignment(zn);
        let e = cn - zn;
        for (sum, s) in bin_sums.iter_mut().zip(&row) {
            *sum += s * e;
        }
        rows.push(row);
    }
    let signs: Vec<f64> = bin_sums.iter().map(|&t| sign(t)).collect();
    let grad = z
        .iter()
        .zip(correctness)
        .zip(&rows)
        .map(|((&zk, &ck), row)| {
            let e = ck - zk;
            let mean_weight: f64 = row.iter().zip(&binning.weights).map(|(s, w)| s * w).sum();
            let mut total = 0.0;
            for ((s, w), sgn) in row.iter().zip(&binning.weights).zip(&signs) {
                total += sgn * (s * (w - mean_weight) / binning.temperature * e - s);
            }
            total / samples as f64
        })
        .collect();
    Ok(grad)
}

/// Annealing and ascent schedule for [`maximize_dece`].
///
/// The temperature runs geometrically from `tau_start` down to `tau_end`
/// over `stages` stages with `steps_per_stage` ascent steps each. Within a
/// stage the step size starts at `step_size` and halves whenever a step
/// fails to improve the soft objective (a plateau), down to `min_step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeceSchedule {
    pub tau_start: f64,
    pub tau_end: f64,
    pub stages: usize,
    pub steps_per_stage: usize,
    pub step_size: f64,
    pub min_step: f64,
    /// Which confidence starts to run; the best result is kept.
    pub z_init: ZInit,
}

impl Default for DeceSchedule {
    fn default() -> Self {
        DeceSchedule {
            tau_start: 1e-2,
            tau_end: 1e-6,
            stages: 40,
            steps_per_stage: 50,
            step_size: 0.1,
            min_step: 1e-9,
            z_init: ZInit::Both,
        }
    }
}

impl DeceSchedule {
    pub fn validate(&self) -> Result<()> {
        let positive_finite = |x: f64| x.is_finite() && x > 0.0;
        if !positive_finite(self.tau_end) || !positive_finite(self.tau_start) {
            return Err(Error::input("temperatures must be positive and finite"));
        }
        if self.tau_end > self.tau_start {
            return Err(Error::Input(format!(
                "tau_end {} exceeds tau_start {}",
                self.tau_end, self.tau_start
            )));
        }
        if self.stages == 0 || self.steps_per_stage == 0 {
            return Err(Error::input("stages and steps_per_stage must be positive"));
        }
        if !positive_finite(self.step_size) || !positive_finite(self.min_step) {
            return Err(Error::input("step sizes must be positive and finite"));
        }
        Ok(())
    }

    /// Stage temperatures, geometric from `tau_start` to `tau_end`
    /// inclusive.
    pub fn temperatures(&self) -> Vec<f64> {
        if self.stages == 1 {
            return vec![self.tau_end];
        }
        let ratio = self.tau_end / self.tau_start;
        (0..self.stages)
            .map(|i| self.tau_start * ratio.powf(i as f64 / (self.stages - 1) as f64))
            .collect()
    }
}

/// Outcome of one ascent start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeceStart {
    pub start: ZInit,
    /// Hard equal-width ECE of the starting confidences.
    pub initial_hard_ece: f64,
    /// Best hard ECE seen along this start's ascent.
    pub best_hard_ece: f64,
    /// Soft objective at the final iterate and temperature.
    pub final_soft_value: f64,
}

/// Result of [`maximize_dece`]: the best hard-binned calibration error found
/// and the per-sample confidences attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeceReport {
    pub best_hard_ece: f64,
    /// Per-sample confidences attaining `best_hard_ece`, inside the boxes.
    pub best_confidences: Vec<f64>,
    pub winning_start: ZInit,
    pub starts: Vec<DeceStart>,
}

/// Per-sample confidence boxes recovered from the assembled instance (the
/// extreme accessible slot bounds reproduce the record bounds exactly).
fn sample_boxes(instance: &MipInstance) -> Vec<(f64, f64)> {
    (0..instance.samples)
        .map(|n| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for m in instance.accessible_bins(n) {
                let slot = instance.slot(n, m);
                lo = lo.min(instance.lower[slot]);
                hi = hi.max(instance.upper[slot]);
            }
            (lo, hi)
        })
        .collect()
}

/// Hard equal-width ECE of per-sample confidences, evaluated through the
/// instance so the arithmetic matches the solver and the oracle bit for
/// bit.
fn hard_ece(instance: &MipInstance, z: &[f64]) -> Result<f64> {
    objective(instance, &natural_point_of(instance, z))
}

struct AscentOutcome {
    start: DeceStart,
    best_z: Vec<f64>,
}

fn run_ascent(
    instance: &MipInstance,
    boxes: &[(f64, f64)],
    start: ZInit,
    start_z: &[f64],
    schedule: &DeceSchedule,
) -> Result<AscentOutcome> {
    let mut z: Vec<f64> = start_z
        .iter()
        .zip(boxes)
        .map(|(&v, &(lo, hi))| v.clamp(lo, hi))
        .collect();
    let initial_hard_ece = hard_ece(instance, &z)?;
    let mut best_hard = initial_hard_ece;
    let mut best_z = z.clone();
    let mut binning = SoftBinning::from_scheme(&instance.binning, schedule.tau_start)?;
    let mut soft = 0.0;
    for tau in schedule.temperatures() {
        binning = binning.with_temperature(tau)?;
        soft = dece_value(&z, &instance.correctness, &binning)?;
        let mut step = schedule.step_size;
        for _ in 0..schedule.steps_per_stage {
            let grad = dece_gradient(&z, &instance.correctness, &binning)?;
            let candidate: Vec<f64> = z
                .iter()
                .zip(&grad)
                .zip(boxes)
                .map(|((&v, &g), &(lo, hi))| (v + step * g).clamp(lo, hi))
                .collect();
            let candidate_soft = dece_value(&candidate, &instance.correctness, &binning)?;
            if candidate_soft > soft {
                z = candidate;
                soft = candidate_soft;
                let hard = hard_ece(instance, &z)?;
                if hard > best_hard {
                    best_hard = hard;
                    best_z = z.clone();
                }
            } else {
                step *= 0.5;
                if step < schedule.min_step {
                    break;
                }
            }
        }
    }
    Ok(AscentOutcome {
        start: DeceStart {
            start,
            initial_hard_ece,
            best_hard_ece: best_hard,
            final_soft_value: soft,
        },
        best_z,
    })
}

/// Projected gradient ascent of the soft calibration error over the
/// per-sample confidence boxes, annealing the temperature per `schedule`.
///
/// Every record must carry explicit confidence bounds. Both the starting
/// confidences and every accepted iterate are scored with the hard
/// equal-width ECE; the report keeps the best, so the result is at least
/// the larger of the two starting errors and, being the error of a feasible
/// point, never exceeds the true worst case.
pub fn maximize_dece(
    records: &[PredictionRecord],
    scheme: &BinningScheme,
    schedule: &DeceSchedule,
) -> Result<DeceReport> {
    schedule.validate()?;
    for record in records {
        if record.lower.is_none() || record.upper.is_none() {
            return Err(Error::Input(format!(
                "record {}: confidence bounds are required",
                record.id
            )));
        }
    }
    let instance = build_instance(records, scheme)?;
    let boxes = sample_boxes(&instance);
    let mut starts: Vec<(ZInit, Vec<f64>)> = Vec::new();
    if matches!(schedule.z_init, ZInit::Clean | ZInit::Both) {
        starts.push((ZInit::Clean, instance.clean_confidence.clone()));
    }
    if matches!(schedule.z_init, ZInit::Brier | ZInit::Both) {
        let brier = brier_start(&instance);
        // A degenerate instance can make both starts identical; one run
        // then covers both.
        if !(schedule.z_init == ZInit::Both && brier == instance.clean_confidence) {
            starts.push((ZInit::Brier, brier));
        }
    }
    let mut outcomes = Vec::with_capacity(starts.len());
    for (label, start_z) in &starts {
        outcomes.push(run_ascent(&instance, &boxes, *label, start_z, schedule)?);
    }
    // Strictly-greater keeps the earliest start on ties.
    let mut winner = 0;
    for (i, outcome) in outcomes.iter().enumerate().skip(1) {
        if outcome.start.best_hard_ece > outcomes[winner].start.best_hard_ece {
            winner = i;
        }
    }
    let best = &outcomes[winner];
    Ok(DeceReport {
        best_hard_ece: best.start.best_hard_ece,
        best_confidences: best.best_z.clone(),
        winning_start: best.start.start,
        starts: outcomes.iter().map(|o| o.start.clone()).collect(),
    })
}
