//! Calibration and scoring metrics: ECE over a binning scheme, AdaECE
//! (equal-count bins), top-label Brier score, and reliability-diagram rows.
//!
//! Bin convention: bins are half-open [b_{m-1}, b_m) except the last, which
//! is closed [b_{M-1}, 1], so a confidence of exactly 1.0 is assignable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::records::{unit_interval, PredictionRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinKind {
    EqualWidth,
    EqualCount,
}

/// A partition of [0, 1] into M bins.
///
/// Equal-width edges are m/M exactly. Equal-count schemes assign by sorted
/// rank, not by edge comparison; their edges are derived midpoints kept only
/// for reporting, and can collide when confidences tie.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningScheme {
    pub kind: BinKind,
    pub bin_count: usize,
    pub edges: Vec<f64>,
}

impl BinningScheme {
    pub fn equal_width(bin_count: usize) -> Result<Self> {
        if bin_count == 0 {
            return Err(Error::input("bin count must be positive"));
        }
        let m = bin_count as f64;
        let edges = (0..=bin_count).map(|i| i as f64 / m).collect();
        Ok(BinningScheme {
            kind: BinKind::EqualWidth,
            bin_count,
            edges,
        })
    }

    /// Equal-count scheme over the given confidences (used by AdaECE).
    pub fn equal_count(bin_count: usize, confidences: &[f64]) -> Result<Self> {
        if bin_count == 0 {
            return Err(Error::input("bin count must be positive"));
        }
        if bin_count > confidences.len() {
            return Err(Error::Input(format!(
                "bin count {bin_count} exceeds sample count {}",
                confidences.len()
            )));
        }
        let mut sorted = confidences.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut edges = Vec::with_capacity(bin_count + 1);
        edges.push(0.0);
        for boundary in chunk_boundaries(sorted.len(), bin_count) {
            // midpoint between the last sample of one bin and the first of
            // the next; nondecreasing by construction, equal under ties
            edges.push(0.5 * (sorted[boundary - 1] + sorted[boundary]));
        }
        edges.push(1.0);
        Ok(BinningScheme {
            kind: BinKind::EqualCount,
            bin_count,
            edges,
        })
    }

    /// Bin index for a confidence under the half-open convention (last bin
    /// closed). Meaningful for edge-based (equal-width) schemes.
    pub fn bin_index(&self, z: f64) -> usize {
        let interior = &self.edges[1..self.bin_count];
        interior.partition_point(|e| *e <= z)
    }

    /// Lower and upper edge of bin `m`.
    pub fn bin_bounds(&self, m: usize) -> (f64, f64) {
        (self.edges[m], self.edges[m + 1])
    }
}

/// Boundary positions (in sorted order) between consecutive equal-count
/// bins: the first `n % m` bins take the extra sample.
fn chunk_boundaries(n: usize, m: usize) -> Vec<usize> {
    let base = n / m;
    let extra = n % m;
    let mut out = Vec::with_capacity(m - 1);
    let mut pos = 0;
    for i in 0..m - 1 {
        pos += base + usize::from(i < extra);
        out.push(pos);
    }
    out
}

/// One reliability-diagram row. Empty bins keep `None` statistics and
/// contribute zero weight to the ECE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinRow {
    pub count: usize,
    pub mean_confidence: Option<f64>,
    pub accuracy: Option<f64>,
    /// Signed miscalibration: mean confidence minus accuracy.
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub ece: f64,
    pub rows: Vec<BinRow>,
    pub binning: BinningScheme,
    pub n: usize,
}

fn sanitized_confidences(records: &[PredictionRecord]) -> Result<Vec<f64>> {
    if records.is_empty() {
        return Err(Error::input("no records"));
    }
    records
        .iter()
        .map(|r| unit_interval(r.confidence, &format!("record {}: confidence", r.id)))
        .collect()
}

/// Group records into bins and reduce to a report. `assignment[i]` is the
/// bin of record `i`.
fn report_from_assignment(
    records: &[PredictionRecord],
    confidences: &[f64],
    assignment: &[usize],
    binning: BinningScheme,
) -> CalibrationReport {
    let m = binning.bin_count;
    let n = records.len();
    let mut count = vec![0usize; m];
    let mut conf_sum = vec![0.0f64; m];
    let mut correct_sum = vec![0.0f64; m];
    for (i, (&bin, &z)) in assignment.iter().zip(confidences).enumerate() {
        count[bin] += 1;
        conf_sum[bin] += z;
        correct_sum[bin] += f64::from(records[i].correct);
    }
    let mut ece = 0.0;
    let rows = (0..m)
        .map(|b| {
            if count[b] == 0 {
                return BinRow {
                    count: 0,
                    mean_confidence: None,
                    accuracy: None,
                    gap: None,
                };
            }
            let c = count[b] as f64;
            let mean_confidence = conf_sum[b] / c;
            let accuracy = correct_sum[b] / c;
            let gap = mean_confidence - accuracy;
            ece += c / n as f64 * gap.abs();
            BinRow {
                count: count[b],
                mean_confidence: Some(mean_confidence),
                accuracy: Some(accuracy),
                gap: Some(gap),
            }
        })
        .collect();
    CalibrationReport {
        ece,
        rows,
        binning,
        n,
    }
}

/// Expected calibration error: the bin-weighted mean absolute gap between
/// accuracy and mean confidence. Empty bins contribute zero.
pub fn compute_ece(records: &[PredictionRecord], scheme: &BinningScheme) -> Result<CalibrationReport> {
    let confidences = sanitized_confidences(records)?;
    let assignment: Vec<usize> = match scheme.kind {
        BinKind::EqualWidth => confidences.iter().map(|&z| scheme.bin_index(z)).collect(),
        BinKind::EqualCount => equal_count_assignment(&confidences, scheme.bin_count)?,
    };
    Ok(report_from_assignment(
        records,
        &confidences,
        &assignment,
        scheme.clone(),
    ))
}

/// Rank-based assignment: stable sort by confidence (input order breaks
/// ties), then chunks whose sizes differ by at most one.
fn equal_count_assignment(confidences: &[f64], m: usize) -> Result<Vec<usize>> {
    if m > confidences.len() {
        return Err(Error::Input(format!(
            "bin count {m} exceeds sample count {}",
            confidences.len()
        )));
    }
    let mut order: Vec<usize> = (0..confidences.len()).collect();
    order.sort_by(|&a, &b| confidences[a].total_cmp(&confidences[b]));
    let mut boundaries = chunk_boundaries(confidences.len(), m);
    boundaries.push(confidences.len());
    let mut assignment = vec![0usize; confidences.len()];
    let mut start = 0;
    for (bin, &end) in boundaries.iter().enumerate() {
        for &idx in &order[start..end] {
            assignment[idx] = bin;
        }
        start = end;
    }
    Ok(assignment)
}

/// Adaptive ECE: equal-count bins built from these records' confidences.
pub fn compute_adaece(records: &[PredictionRecord], bin_count: usize) -> Result<CalibrationReport> {
    let confidences = sanitized_confidences(records)?;
    let scheme = BinningScheme::equal_count(bin_count, &confidences)?;
    let assignment = equal_count_assignment(&confidences, bin_count)?;
    Ok(report_from_assignment(
        records,
        &confidences,
        &assignment,
        scheme,
    ))
}

/// Top-label Brier score: mean squared error between confidence and
/// correctness.
pub fn compute_tlbs(records: &[PredictionRecord]) -> Result<f64> {
    let confidences = sanitized_confidences(records)?;
    let n = records.len() as f64;
    Ok(records
        .iter()
        .zip(&confidences)
        .map(|(r, &z)| {
            let e = f64::from(r.correct) - z;
            e * e
        })
        .sum::<f64>()
        / n)
}

/// Per-bin rows for a reliability diagram; same computation as
/// [`compute_ece`], kept as a named entry point for plotting flows.
pub fn reliability_data(
    records: &[PredictionRecord],
    scheme: &BinningScheme,
) -> Result<CalibrationReport> {
    compute_ece(records, scheme)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(z: f64, correct: bool) -> PredictionRecord {
        PredictionRecord::new(format!("r{z}"), z, correct)
    }

    fn records(zs: &[f64], cs: &[bool]) -> Vec<PredictionRecord> {
        zs.iter().zip(cs).map(|(&z, &c)| rec(z, c)).collect()
    }

    #[test]
    fn equal_width_edges_exact() {
        let s = BinningScheme::equal_width(3).unwrap();
        assert_eq!(s.edges, vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);
        assert_eq!(s.bin_index(0.0), 0);
        assert_eq!(s.bin_index(0.23), 0);
        assert_eq!(s.bin_index(1.0 / 3.0), 1);
        assert_eq!(s.bin_index(0.78), 2);
        assert_eq!(s.bin_index(1.0), 2);
    }

    #[test]
    fn half_confidence_all_correct() {
        // accuracy 1 at confidence 0.5: maximal miscalibration despite
        // perfect accuracy
        let rs = records(&[0.5; 10], &[true; 10]);
        let scheme = BinningScheme::equal_width(10).unwrap();
        let report = compute_ece(&rs, &scheme).unwrap();
        assert_eq!(report.ece, 0.5);
    }

    #[test]
    fn half_confidence_all_wrong() {
        let rs = records(&[0.5; 10], &[false; 10]);
        let scheme = BinningScheme::equal_width(10).unwrap();
        assert_eq!(compute_ece(&rs, &scheme).unwrap().ece, 0.5);
    }

    #[test]
    fn full_confidence_all_correct() {
        let rs = records(&[1.0; 10], &[true; 10]);
        let scheme = BinningScheme::equal_width(10).unwrap();
        assert_eq!(compute_ece(&rs, &scheme).unwrap().ece, 0.0);
    }

    #[test]
    fn two_sample_ece() {
        // z = [0.23, 0.78], c = [1, 0], three equal bins: 0.78 lands in the
        // closed top bin, ECE = (0.77 + 0.78) / 2
        let rs = records(&[0.23, 0.78], &[true, false]);
        let scheme = BinningScheme::equal_width(3).unwrap();
        let report = compute_ece(&rs, &scheme).unwrap();
        assert!((report.ece - 0.775).abs() < 1e-15);
        assert_eq!(report.rows[0].count, 1);
        assert_eq!(report.rows[1].count, 0);
        assert_eq!(report.rows[2].count, 1);
    }

    #[test]
    fn adaece_worked_example() {
        let rs = records(&[0.1, 0.2, 0.9, 0.95], &[false, false, true, true]);
        let report = compute_adaece(&rs, 2).unwrap();
        assert!((report.ece - 0.1125).abs() < 1e-15);
    }

    #[test]
    fn adaece_singleton_bins() {
        let rs = records(&[0.3, 0.6, 0.8], &[true, false, true]);
        let report = compute_adaece(&rs, 3).unwrap();
        let mean_abs = ((1.0f64 - 0.3).abs() + (0.0f64 - 0.6).abs() + (1.0f64 - 0.8).abs()) / 3.0;
        assert!((report.ece - mean_abs).abs() < 1e-15);
    }

    #[test]
    fn adaece_bin_sizes_differ_by_at_most_one() {
        let rs = records(
            &[0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
            &[true, false, true, false, true, false, true],
        );
        let report = compute_adaece(&rs, 3).unwrap();
        let sizes: Vec<usize> = report.rows.iter().map(|r| r.count).collect();
        assert_eq!(sizes, vec![3, 2, 2]);
    }

    #[test]
    fn adaece_rejects_more_bins_than_samples() {
        let rs = records(&[0.1, 0.9], &[true, false]);
        assert!(compute_adaece(&rs, 3).is_err());
    }

    #[test]
    fn tlbs_examples() {
        let rs = records(&[0.23, 0.78], &[true, false]);
        assert!((compute_tlbs(&rs).unwrap() - 0.60065).abs() < 1e-15);

        let rs = records(&[1.0, 1.0], &[true, true]);
        assert_eq!(compute_tlbs(&rs).unwrap(), 0.0);

        let rs = records(&[0.5, 0.5, 0.5], &[true, false, true]);
        assert_eq!(compute_tlbs(&rs).unwrap(), 0.25);
    }

    #[test]
    fn single_bin_reduces_to_mean_gap() {
        let rs = records(&[0.2, 0.6, 0.9], &[false, true, true]);
        let scheme = BinningScheme::equal_width(1).unwrap();
        let report = compute_ece(&rs, &scheme).unwrap();
        let mean_conf: f64 = (0.2 + 0.6 + 0.9) / 3.0;
        let acc = 2.0 / 3.0;
        assert!((report.ece - (mean_conf - acc).abs()).abs() < 1e-15);
    }

    #[test]
    fn reliability_gap_is_signed() {
        let rs = vec![rec(0.9, true)];
        let scheme = BinningScheme::equal_width(10).unwrap();
        let report = reliability_data(&rs, &scheme).unwrap();
        let row = &report.rows[9];
        assert_eq!(row.count, 1);
        assert!((row.gap.unwrap() + 0.1).abs() < 1e-15);
    }

    #[test]
    fn report_consistency() {
        let rs = records(&[0.1, 0.34, 0.55, 0.8, 0.99], &[false, true, false, true, true]);
        let scheme = BinningScheme::equal_width(4).unwrap();
        let report = compute_ece(&rs, &scheme).unwrap();
        let total: usize = report.rows.iter().map(|r| r.count).sum();
        assert_eq!(total, report.n);
        let recomputed: f64 = report
            .rows
            .iter()
            .filter(|r| r.count > 0)
            .map(|r| r.count as f64 / report.n as f64 * r.gap.unwrap().abs())
            .sum();
        assert!((report.ece - recomputed).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_confidence() {
        let rs = records(&[1.2], &[true]);
        let scheme = BinningScheme::equal_width(2).unwrap();
        assert!(compute_ece(&rs, &scheme).is_err());
        assert!(compute_tlbs(&rs).is_err());
    }

    #[test]
    fn empty_records_rejected() {
        let scheme = BinningScheme::equal_width(2).unwrap();
        assert!(compute_ece(&[], &scheme).is_err());
        assert!(compute_tlbs(&[]).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_records(max_n: usize) -> impl Strategy<Value = Vec<PredictionRecord>> {
            prop::collection::vec((0.0f64..=1.0, any::<bool>()), 1..max_n).prop_map(|pairs| {
                pairs
                    .into_iter()
                    .enumerate()
                    .map(|(i, (z, c))| PredictionRecord::new(format!("p{i}"), z, c))
                    .collect()
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn ece_permutation_invariant(rs in arb_records(40), m in 1usize..8) {
                let scheme = BinningScheme::equal_width(m).unwrap();
                let a = compute_ece(&rs, &scheme).unwrap().ece;
                let mut rev: Vec<_> = rs.clone();
                rev.reverse();
                let b = compute_ece(&rev, &scheme).unwrap().ece;
                prop_assert!((a - b).abs() < 1e-12);
            }

            #[test]
            fn metrics_in_unit_range(rs in arb_records(40), m in 1usize..8) {
                let scheme = BinningScheme::equal_width(m).unwrap();
                let ece = compute_ece(&rs, &scheme).unwrap().ece;
                let tlbs = compute_tlbs(&rs).unwrap();
                prop_assert!((0.0..=1.0).contains(&ece));
                prop_assert!((0.0..=1.0).contains(&tlbs));
            }

            #[test]
            fn adaece_permutation_invariant_distinct(zs in prop::collection::hash_set(0u32..10_000, 2..30)) {
                // distinct confidences: sorted order is unique, so record
                // order cannot matter
                let zs: Vec<f64> = zs.into_iter().map(|v| v as f64 / 10_000.0).collect();
                let rs: Vec<PredictionRecord> = zs
                    .iter()
                    .enumerate()
                    .map(|(i, &z)| PredictionRecord::new(format!("p{i}"), z, i % 2 == 0))
                    .collect();
                let m = 1 + rs.len() / 2;
                let a = compute_adaece(&rs, m).unwrap().ece;
                let mut rev = rs.clone();
                rev.reverse();
                let b = compute_adaece(&rev, m).unwrap().ece;
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
