//! Randomized-smoothing certificates for confidence scores.
//!
//! Given Monte Carlo evidence about a smoothed classifier, this module
//! derives a certified perturbation radius and, for any radius within it,
//! an interval `[lower, upper]` that contains the smoothed confidence under
//! every perturbation of that magnitude. Two interval constructions are
//! provided: [`standard_bound`], which uses only a point estimate (or a
//! scalar confidence interval) of the smoothed confidence, and
//! [`cdf_bound`], which sharpens the interval using a banded empirical CDF
//! of the confidence samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{normal_cdf_sigma, normal_quantile_sigma};
use crate::records::unit_interval;

/// Probabilities are clamped into `[PROB_CLAMP, 1 - PROB_CLAMP]` before
/// Gaussian inversion so the quantile stays finite.
pub const PROB_CLAMP: f64 = 1e-12;

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

fn check_sigma(sigma: f64) -> Result<f64> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::input(format!("sigma must be positive, got {sigma}")));
    }
    Ok(sigma)
}

fn check_alpha(alpha: f64) -> Result<f64> {
    if !alpha.is_finite() || alpha <= 0.0 || alpha > 1.0 {
        return Err(Error::input(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(alpha)
}

fn check_radius(radius: f64) -> Result<f64> {
    if !radius.is_finite() || radius < 0.0 {
        return Err(Error::input(format!("radius must be nonnegative, got {radius}")));
    }
    Ok(radius)
}

/// Which interval construction produced a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateMethod {
    Standard,
    Cdf,
}

/// A certified confidence interval at a given radius: under any perturbation
/// of norm at most `radius`, the smoothed confidence stays in
/// `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceCertificate {
    pub lower: f64,
    pub upper: f64,
    pub radius: f64,
    pub method: CertificateMethod,
}

impl ConfidenceCertificate {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Result of a radius certification: either a certified radius or an
/// abstention when the evidence cannot separate the top class from the
/// runner-up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "outcome", content = "radius")]
pub enum RadiusOutcome {
    Certified(f64),
    Abstain,
}

impl RadiusOutcome {
    pub fn radius(&self) -> Option<f64> {
        match *self {
            RadiusOutcome::Certified(r) => Some(r),
            RadiusOutcome::Abstain => None,
        }
    }

    pub fn is_abstain(&self) -> bool {
        matches!(self, RadiusOutcome::Abstain)
    }
}

/// Monte Carlo evidence about one input under Gaussian smoothing with
/// standard deviation `sigma`: how many of `n_samples` noisy forward passes
/// voted for the top class (and optionally the runner-up), plus optional
/// confidence observations used by the interval constructions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingEvidence {
    pub n_samples: u64,
    pub sigma: f64,
    /// Failure probability for the derived bounds.
    pub alpha: f64,
    /// Votes for the predicted class.
    pub top_count: u64,
    /// Votes for the runner-up class. When absent, the runner-up mass is
    /// bounded by `1 - lower_top`, which is the conservative default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runner_count: Option<u64>,
    /// Mean observed confidence of the predicted class under noise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_top_confidence: Option<f64>,
    /// Raw per-sample confidences of the predicted class under noise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence_samples: Option<Vec<f64>>,
}

impl SmoothingEvidence {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::input("evidence needs at least one sample"));
        }
        check_sigma(self.sigma)?;
        check_alpha(self.alpha)?;
        if self.top_count > self.n_samples {
            return Err(Error::input(format!(
                "top_count {} exceeds n_samples {}",
                self.top_count, self.n_samples
            )));
        }
        if let Some(runner) = self.runner_count {
            if self.top_count + runner > self.n_samples {
                return Err(Error::input(format!(
                    "top_count {} + runner_count {runner} exceeds n_samples {}",
                    self.top_count, self.n_samples
                )));
            }
        }
        if let Some(mean) = self.mean_top_confidence {
            unit_interval(mean, "mean_top_confidence")?;
        }
        if let Some(samples) = &self.confidence_samples {
            if samples.len() as u64 != self.n_samples {
                return Err(Error::input(format!(
                    "{} confidence samples for {} noise draws",
                    samples.len(),
                    self.n_samples
                )));
            }
            for &s in samples {
                unit_interval(s, "confidence sample")?;
            }
        }
        Ok(())
    }

    /// Mean confidence: the explicit mean if present, otherwise the mean of
    /// the raw samples.
    pub fn mean_confidence(&self) -> Result<f64> {
        if let Some(mean) = self.mean_top_confidence {
            return unit_interval(mean, "mean_top_confidence");
        }
        if let Some(samples) = &self.confidence_samples {
            if samples.is_empty() {
                return Err(Error::input("empty confidence sample set"));
            }
            return Ok(samples.iter().sum::<f64>() / samples.len() as f64);
        }
        Err(Error::input(
            "evidence carries neither mean_top_confidence nor confidence_samples",
        ))
    }
}

/// Exact-mode radius from known class probabilities: the smoothed prediction
/// is constant within radius `(sigma / 2) * (quantile(p_a) - quantile(p_b))`
/// when `p_a > p_b`, and the certificate abstains otherwise.
pub fn radius_from_probabilities(p_a: f64, p_b: f64, sigma: f64) -> Result<RadiusOutcome> {
    check_sigma(sigma)?;
    let p_a = unit_interval(p_a, "top-class probability")?;
    let p_b = unit_interval(p_b, "runner-up probability")?;
    if p_a <= p_b {
        return Ok(RadiusOutcome::Abstain);
    }
    let q_a = normal_quantile_sigma(clamp_prob(p_a), 1.0);
    let q_b = normal_quantile_sigma(clamp_prob(p_b), 1.0);
    Ok(RadiusOutcome::Certified(sigma / 2.0 * (q_a - q_b)))
}

/// Certified radius from vote counts. The top-class probability is lowered
/// by a one-sided Hoeffding margin at level `alpha`; the runner-up is raised
/// symmetrically when its count was recorded and otherwise bounded by
/// `1 - lower_top`.
pub fn certified_radius(evidence: &SmoothingEvidence) -> Result<RadiusOutcome> {
    evidence.validate()?;
    let n = evidence.n_samples as f64;
    let margin = ((1.0 / evidence.alpha).ln() / (2.0 * n)).sqrt();
    let lower_top = (evidence.top_count as f64 / n - margin).max(0.0);
    let upper_runner = match evidence.runner_count {
        Some(runner) => (runner as f64 / n + margin).min(1.0),
        None => 1.0 - lower_top,
    };
    if lower_top <= upper_runner {
        return Ok(RadiusOutcome::Abstain);
    }
    radius_from_probabilities(lower_top, upper_runner, evidence.sigma)
}

/// Interval for the smoothed confidence at `radius` from a scalar interval
/// `[z_lower, z_upper]` on its unperturbed value: the confidence can fall to
/// `cdf(quantile(z_lower) - radius; sigma)` and rise to
/// `cdf(quantile(z_upper) + radius; sigma)`, and no further.
///
/// At `radius == 0` the interval is returned unchanged.
pub fn standard_bound(
    z_lower: f64,
    z_upper: f64,
    radius: f64,
    sigma: f64,
) -> Result<ConfidenceCertificate> {
    check_sigma(sigma)?;
    check_radius(radius)?;
    let z_lower = unit_interval(z_lower, "confidence lower bound")?;
    let z_upper = unit_interval(z_upper, "confidence upper bound")?;
    if z_lower > z_upper {
        return Err(Error::input(format!(
            "confidence bounds out of order: {z_lower} > {z_upper}"
        )));
    }
    let (lower, upper) = if radius == 0.0 {
        (z_lower, z_upper)
    } else {
        let lower = normal_cdf_sigma(normal_quantile_sigma(clamp_prob(z_lower), sigma) - radius, sigma);
        let upper = normal_cdf_sigma(normal_quantile_sigma(clamp_prob(z_upper), sigma) + radius, sigma);
        (lower.clamp(0.0, 1.0), upper.clamp(0.0, 1.0))
    };
    Ok(ConfidenceCertificate { lower, upper, radius, method: CertificateMethod::Standard })
}

/// A banded empirical CDF of the confidence distribution under smoothing
/// noise: at each threshold `s_j` the true CDF lies in
/// `[cdf_lower[j], cdf_upper[j]]` simultaneously. Thresholds live strictly
/// inside `(0, 1)`; the endpoints 0 and 1 act as implicit sentinels where
/// the CDF is 0 and 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdfPartition {
    pub thresholds: Vec<f64>,
    pub cdf_lower: Vec<f64>,
    pub cdf_upper: Vec<f64>,
}

impl EcdfPartition {
    pub fn new(thresholds: Vec<f64>, cdf_lower: Vec<f64>, cdf_upper: Vec<f64>) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::input("partition needs at least one threshold"));
        }
        if cdf_lower.len() != thresholds.len() || cdf_upper.len() != thresholds.len() {
            return Err(Error::input(format!(
                "band lengths {} / {} do not match {} thresholds",
                cdf_lower.len(),
                cdf_upper.len(),
                thresholds.len()
            )));
        }
        let mut prev = 0.0;
        for &s in &thresholds {
            if !s.is_finite() || s <= 0.0 || s >= 1.0 {
                return Err(Error::input(format!(
                    "threshold {s} must lie strictly inside (0, 1)"
                )));
            }
            if s < prev {
                return Err(Error::input("thresholds must be nondecreasing"));
            }
            prev = s;
        }
        for j in 0..thresholds.len() {
            let lo = unit_interval(cdf_lower[j], "cdf band lower")?;
            let hi = unit_interval(cdf_upper[j], "cdf band upper")?;
            if lo > hi {
                return Err(Error::input(format!(
                    "cdf band out of order at threshold {}: {lo} > {hi}",
                    thresholds[j]
                )));
            }
            // Both envelope curves must be CDF-shaped themselves.
            if j > 0 && (cdf_lower[j] < cdf_lower[j - 1] || cdf_upper[j] < cdf_upper[j - 1]) {
                return Err(Error::input("cdf bands must be nondecreasing across thresholds"));
            }
        }
        Ok(Self { thresholds, cdf_lower, cdf_upper })
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }
}

/// Evenly spaced interior thresholds `k / (count + 1)` for `k = 1..=count`.
pub fn uniform_thresholds(count: usize) -> Vec<f64> {
    (1..=count).map(|k| k as f64 / (count + 1) as f64).collect()
}

/// Simultaneous Dvoretzky–Kiefer–Wolfowitz band for the empirical CDF of
/// `samples` at the given thresholds: the empirical fraction at or below
/// each threshold, widened by `sqrt(ln(2 / alpha) / (2 n))` on both sides.
pub fn dkw_band(samples: &[f64], alpha: f64, thresholds: &[f64]) -> Result<EcdfPartition> {
    check_alpha(alpha)?;
    if samples.is_empty() {
        return Err(Error::input("dkw band needs at least one sample"));
    }
    for &s in samples {
        unit_interval(s, "confidence sample")?;
    }
    let n = samples.len() as f64;
    let width = ((2.0 / alpha).ln() / (2.0 * n)).sqrt();
    let mut cdf_lower = Vec::with_capacity(thresholds.len());
    let mut cdf_upper = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let hat = samples.iter().filter(|&&s| s <= t).count() as f64 / n;
        cdf_lower.push((hat - width).clamp(0.0, 1.0));
        cdf_upper.push((hat + width).clamp(0.0, 1.0));
    }
    EcdfPartition::new(thresholds.to_vec(), cdf_lower, cdf_upper)
}

/// Which sides a Hoeffding interval covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sided {
    One,
    Two,
}

/// Hoeffding interval for the mean of `count` observations in `[0, 1]`:
/// `mean ± sqrt(ln(c / alpha) / (2 count))` with `c = 1` one-sided (the
/// margin applies to each side separately at level `alpha`) and `c = 2`
/// two-sided, clamped into `[0, 1]`.
pub fn hoeffding_bound(mean: f64, count: u64, alpha: f64, sided: Sided) -> Result<(f64, f64)> {
    let mean = unit_interval(mean, "sample mean")?;
    check_alpha(alpha)?;
    if count == 0 {
        return Err(Error::input("hoeffding bound needs at least one observation"));
    }
    let c = match sided {
        Sided::One => 1.0,
        Sided::Two => 2.0,
    };
    let width = ((c / alpha).ln() / (2.0 * count as f64)).sqrt();
    Ok(((mean - width).clamp(0.0, 1.0), (mean + width).clamp(0.0, 1.0)))
}

/// Interval for the smoothed confidence at `radius` from a banded empirical
/// CDF. Each CDF band is converted to a band on the exceedance probability
/// at its threshold, every exceedance is shifted the worst way by `radius`
/// in quantile space, and the shifted pieces are recombined over the
/// partition cells. Sharper than [`standard_bound`] whenever the confidence
/// distribution is concentrated.
pub fn cdf_bound(partition: &EcdfPartition, radius: f64, sigma: f64) -> Result<ConfidenceCertificate> {
    check_sigma(sigma)?;
    check_radius(radius)?;
    if partition.is_empty() {
        return Err(Error::input("partition needs at least one threshold"));
    }
    let n = partition.len();
    let mut lower = 0.0;
    // The cell below the first threshold: its exceedance is bounded only by
    // one (the sentinel), and a quantile shift leaves that bound at one, so
    // the cell contributes its full width to the upper estimate. Dropping
    // it would let mass below the first threshold escape the upper bound.
    let mut upper = partition.thresholds[0];
    for j in 0..n {
        let s_prev = if j == 0 { 0.0 } else { partition.thresholds[j - 1] };
        let s_j = partition.thresholds[j];
        let s_next = if j + 1 == n { 1.0 } else { partition.thresholds[j + 1] };
        // Exceedance band at s_j: the survival function 1 - cdf.
        let exc_lower = clamp_prob(1.0 - partition.cdf_upper[j]);
        let exc_upper = clamp_prob(1.0 - partition.cdf_lower[j]);
        lower += (s_j - s_prev) * normal_cdf_sigma(normal_quantile_sigma(exc_lower, sigma) - radius, sigma);
        upper += (s_next - s_j) * normal_cdf_sigma(normal_quantile_sigma(exc_upper, sigma) + radius, sigma);
    }
    Ok(ConfidenceCertificate {
        lower: lower.clamp(0.0, 1.0),
        upper: upper.clamp(0.0, 1.0),
        radius,
        method: CertificateMethod::Cdf,
    })
}

/// Mean certificate widths of the two interval constructions on a shared
/// evidence set, one row per requested radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthRow {
    pub radius: f64,
    pub standard_mean_width: f64,
    pub cdf_mean_width: f64,
}

/// Compare [`standard_bound`] and [`cdf_bound`] widths across radii. Every
/// evidence entry must carry raw confidence samples; the standard interval
/// starts from a two-sided Hoeffding bound on their mean and the CDF
/// interval from a DKW band over `threshold_count` uniform thresholds.
pub fn certificate_width_report(
    evidence: &[SmoothingEvidence],
    radii: &[f64],
    threshold_count: usize,
) -> Result<Vec<WidthRow>> {
    if evidence.is_empty() {
        return Err(Error::input("width report needs at least one evidence entry"));
    }
    if threshold_count == 0 {
        return Err(Error::input("width report needs at least one threshold"));
    }
    let mut prepared = Vec::with_capacity(evidence.len());
    for ev in evidence {
        ev.validate()?;
        let samples = ev.confidence_samples.as_ref().ok_or_else(|| {
            Error::input("width report needs raw confidence samples on every entry")
        })?;
        let mean = ev.mean_confidence()?;
        let (z_lower, z_upper) = hoeffding_bound(mean, ev.n_samples, ev.alpha, Sided::Two)?;
        let band = dkw_band(samples, ev.alpha, &uniform_thresholds(threshold_count))?;
        prepared.push((z_lower, z_upper, band, ev.sigma));
    }
    let mut rows = Vec::with_capacity(radii.len());
    for &radius in radii {
        check_radius(radius)?;
        let mut std_sum = 0.0;
        let mut cdf_sum = 0.0;
        for (z_lower, z_upper, band, sigma) in &prepared {
            std_sum += standard_bound(*z_lower, *z_upper, radius, *sigma)?.width();
            cdf_sum += cdf_bound(band, radius, *sigma)?.width();
        }
        rows.push(WidthRow {
            radius,
            standard_mean_width: std_sum / prepared.len() as f64,
            cdf_mean_width: cdf_sum / prepared.len() as f64,
        });
    }
    Ok(rows)
}
