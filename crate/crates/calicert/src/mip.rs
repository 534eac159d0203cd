//! Assembly of the worst-case calibration program.
//!
//! Certified predictions give each sample a confidence box `[l, u]`; a
//! binning scheme partitions `[0, 1]`. The worst-case calibration error is
//! the maximum binned calibration error over all joint choices of a bin
//! assignment and a confidence per sample, where a sample may enter a bin
//! only if its box overlaps that bin and the chosen confidence must respect
//! both the box and the bin. This module assembles that program — merged
//! per-(sample, bin) bounds, the accessibility mask, the objective, and the
//! feasibility machinery shared by the solver and the oracle.
//!
//! Slots are laid out row-major: `(n, m)` lives at `n * bins + m`. The
//! constraint operators are never materialized; they are index arithmetic
//! over this layout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::BinningScheme;
use crate::records::{unit_interval, PredictionRecord};

/// The assembled worst-case calibration program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MipInstance {
    pub samples: usize,
    pub bins: usize,
    /// 1.0 for a correct prediction, 0.0 otherwise.
    pub correctness: Vec<f64>,
    /// Merged per-slot lower bounds, zeroed where inaccessible.
    pub lower: Vec<f64>,
    /// Merged per-slot upper bounds, zeroed where inaccessible.
    pub upper: Vec<f64>,
    /// Inaccessibility mask: true where a sample's box misses the bin.
    pub inaccessible: Vec<bool>,
    pub binning: BinningScheme,
    /// Clean (unperturbed) confidence per sample.
    pub clean_confidence: Vec<f64>,
    pub ids: Vec<String>,
}

/// A point satisfying all three constraint families exactly: one bin per
/// sample, only accessible bins, confidences inside the merged boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasiblePoint {
    /// Binary assignment vector over slots (stored as exact 0.0 / 1.0).
    pub assignment: Vec<f64>,
    /// Per-slot confidences, inside `[lower, upper]` everywhere.
    pub confidences: Vec<f64>,
}

/// Infinity-norm distances from the four constraint surfaces: row sums to
/// one, mass on inaccessible slots, distance to the binary set, and
/// distance to the confidence boxes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintResiduals {
    pub unique: f64,
    pub valid: f64,
    pub binary: f64,
    pub bounds: f64,
}

impl ConstraintResiduals {
    pub fn max_violation(&self) -> f64 {
        self.unique.max(self.valid).max(self.binary).max(self.bounds)
    }

    pub fn within(&self, tolerance: f64) -> bool {
        self.max_violation() <= tolerance
    }
}

impl MipInstance {
    /// Flat slot index of sample `n`, bin `m`.
    #[inline]
    pub fn slot(&self, n: usize, m: usize) -> usize {
        n * self.bins + m
    }

    pub fn slot_count(&self) -> usize {
        self.samples * self.bins
    }

    /// Accessible bin indices of sample `n`, ascending.
    pub fn accessible_bins(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        let row = n * self.bins;
        (0..self.bins).filter(move |m| !self.inaccessible[row + m])
    }
}

/// Assemble the program from certified predictions. Each sample's box is
/// intersected with every bin: slot bounds are
/// `[max(l_n, edge_lo), min(u_n, edge_hi)]`, and a slot is inaccessible when
/// that intersection is empty or a single point. A point box `l = u` is the
/// exception: it keeps exactly the bin that contains its value under the
/// half-open convention. Records without explicit bounds contribute the
/// point box at their confidence.
pub fn build_instance(records: &[PredictionRecord], scheme: &BinningScheme) -> Result<MipInstance> {
    if records.is_empty() {
        return Err(Error::input("cannot build an instance from zero records"));
    }
    let n = records.len();
    let m = scheme.bin_count;
    let mut correctness = Vec::with_capacity(n);
    let mut lower = vec![0.0; n * m];
    let mut upper = vec![0.0; n * m];
    let mut inaccessible = vec![true; n * m];
    let mut clean_confidence = Vec::with_capacity(n);
    let mut ids = Vec::with_capacity(n);

    for (idx, record) in records.iter().enumerate() {
        let (lo, hi) = record.bounds_or_point();
        let lo = unit_interval(lo, "sample lower bound")?;
        let hi = unit_interval(hi, "sample upper bound")?;
        if lo > hi {
            return Err(Error::input(format!(
                "record {}: bounds out of order ({lo} > {hi})",
                record.id
            )));
        }
        let point_box = lo == hi;
        let natural = scheme.bin_index(lo);
        let mut any_accessible = false;
        for bin in 0..m {
            let (edge_lo, edge_hi) = scheme.bin_bounds(bin);
            let merged_lo = lo.max(edge_lo);
            let merged_hi = hi.min(edge_hi);
            let accessible =
                if point_box { bin == natural } else { merged_lo < merged_hi };
            if accessible {
                let slot = idx * m + bin;
                lower[slot] = merged_lo;
                upper[slot] = merged_hi;
                inaccessible[slot] = false;
                any_accessible = true;
            }
        }
        if !any_accessible {
            return Err(Error::NoAccessibleBin { id: record.id.clone(), lower: lo, upper: hi });
        }
        correctness.push(if record.correct { 1.0 } else { 0.0 });
        clean_confidence.push(unit_interval(record.confidence, "confidence")?);
        ids.push(record.id.clone());
    }

    Ok(MipInstance {
        samples: n,
        bins: m,
        correctness,
        lower,
        upper,
        inaccessible,
        binning: scheme.clone(),
        clean_confidence,
        ids,
    })
}

fn assert_lengths(instance: &MipInstance, a: &[f64], z: &[f64]) {
    assert_eq!(a.len(), instance.slot_count(), "assignment length mismatch");
    assert_eq!(z.len(), instance.slot_count(), "confidence length mismatch");
}

/// The binned calibration error of a feasible point:
/// `(1/N) * sum_m |sum_n a[n,m] * (c_n - z[n,m])|`.
///
/// Fails on any exact constraint violation; use [`project_feasible`] first
/// for relaxed points.
pub fn objective(instance: &MipInstance, point: &FeasiblePoint) -> Result<f64> {
    assert_lengths(instance, &point.assignment, &point.confidences);
    let residuals = check_feasibility(instance, &point.assignment, &point.confidences);
    if residuals.max_violation() != 0.0 {
        return Err(Error::InfeasiblePoint(format!(
            "residuals (unique {}, valid {}, binary {}, bounds {}) must be exactly zero",
            residuals.unique, residuals.valid, residuals.binary, residuals.bounds
        )));
    }
    Ok(relaxed_objective(instance, &point.assignment, &point.confidences))
}

/// The same objective evaluated without feasibility checks, for relaxed
/// iterates.
pub fn relaxed_objective(instance: &MipInstance, a: &[f64], z: &[f64]) -> f64 {
    assert_lengths(instance, a, z);
    let mut total = 0.0;
    for m in 0..instance.bins {
        let mut bin_sum = 0.0;
        for n in 0..instance.samples {
            let slot = n * instance.bins + m;
            bin_sum += a[slot] * (instance.correctness[n] - z[slot]);
        }
        total += bin_sum.abs();
    }
    total / instance.samples as f64
}

/// Measure the four constraint residuals at a (possibly relaxed) point.
pub fn check_feasibility(instance: &MipInstance, a: &[f64], z: &[f64]) -> ConstraintResiduals {
    assert_lengths(instance, a, z);
    let mut unique: f64 = 0.0;
    let mut valid: f64 = 0.0;
    let mut binary: f64 = 0.0;
    let mut bounds: f64 = 0.0;
    for n in 0..instance.samples {
        let mut row_sum = 0.0;
        for m in 0..instance.bins {
            let slot = n * instance.bins + m;
            row_sum += a[slot];
            if instance.inaccessible[slot] {
                valid = valid.max(a[slot].abs());
            }
            binary = binary.max(a[slot].abs().min((a[slot] - 1.0).abs()));
            let below = instance.lower[slot] - z[slot];
            let above = z[slot] - instance.upper[slot];
            bounds = bounds.max(below.max(above).max(0.0));
        }
        unique = unique.max((row_sum - 1.0).abs());
    }
    ConstraintResiduals { unique, valid, binary, bounds }
}

/// Round a relaxed point onto the feasible set: each sample takes its
/// highest-weight accessible bin (ties to the lowest index) and every slot
/// confidence is clamped into its merged box, so the result satisfies all
/// three constraint families exactly.
pub fn project_feasible(instance: &MipInstance, a_relaxed: &[f64], z_relaxed: &[f64]) -> FeasiblePoint {
    assert_lengths(instance, a_relaxed, z_relaxed);
    let mut assignment = vec![0.0; instance.slot_count()];
    let mut confidences = vec![0.0; instance.slot_count()];
    for n in 0..instance.samples {
        let mut best_bin = None;
        let mut best_weight = f64::NEG_INFINITY;
        for m in instance.accessible_bins(n) {
            let weight = a_relaxed[instance.slot(n, m)];
            if weight > best_weight {
                best_weight = weight;
                best_bin = Some(m);
            }
        }
        // Instance invariant: every sample has an accessible bin.
        let chosen = best_bin.expect("sample with no accessible bin");
        assignment[instance.slot(n, chosen)] = 1.0;
        for m in 0..instance.bins {
            let slot = instance.slot(n, m);
            confidences[slot] = z_relaxed[slot].clamp(instance.lower[slot], instance.upper[slot]);
        }
    }
    FeasiblePoint { assignment, confidences }
}

/// The feasible point induced by per-sample confidences: each sample in the
/// bin its value falls in (or its best accessible bin when the box excludes
/// that one), confidence clamped accordingly.
pub fn natural_point_of(instance: &MipInstance, per_sample_z: &[f64]) -> FeasiblePoint {
    assert_eq!(per_sample_z.len(), instance.samples, "per-sample confidence length mismatch");
    let mut a_relaxed = vec![0.0; instance.slot_count()];
    let mut z_relaxed = vec![0.0; instance.slot_count()];
    for (n, &z) in per_sample_z.iter().enumerate() {
        a_relaxed[instance.slot(n, instance.binning.bin_index(z))] = 1.0;
        for m in 0..instance.bins {
            z_relaxed[instance.slot(n, m)] = z;
        }
    }
    project_feasible(instance, &a_relaxed, &z_relaxed)
}

/// [`natural_point_of`] at the clean confidences.
pub fn natural_point(instance: &MipInstance) -> FeasiblePoint {
    natural_point_of(instance, &instance.clean_confidence)
}
