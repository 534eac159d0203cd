//! Exact reference solvers for small instances.
//!
//! These are the ground truth the scalable solvers are judged against:
//! [`brute_force_cce`] enumerates every valid bin assignment and maximizes
//! each bin's term in closed form, [`grid_cce`] cross-checks with a dense
//! grid under natural binning, and [`verify_brier_bound`] stress-tests a
//! claimed worst-case Brier score by sampling the confidence boxes.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::brier::brier_worst_confidences;
use crate::error::{Error, Result};
use crate::mip::{objective, FeasiblePoint, MipInstance};
use crate::records::PredictionRecord;

/// Enumeration ceiling for both oracles.
pub const ENUMERATION_GUARD: f64 = 1e7;

fn accessible_lists(instance: &MipInstance) -> Vec<Vec<usize>> {
    (0..instance.samples).map(|n| instance.accessible_bins(n).collect()).collect()
}

/// Exact worst-case calibration error by enumeration.
///
/// Iterates every assignment of samples to accessible bins. With the
/// assignment fixed, each bin's term `|sum_{n in B_m} (c_n - z_{n,m})|` is
/// affine and decreasing in every coordinate, so its maximum over the slot
/// boxes sits at the all-lower or all-upper vertex; the two are compared
/// per bin independently. Returns the global maximum and a witnessing
/// feasible point (first maximizer in odometer order, last sample cycling
/// fastest; vertex ties prefer all-lower).
pub fn brute_force_cce(instance: &MipInstance) -> Result<(f64, FeasiblePoint)> {
    let choices = accessible_lists(instance);
    let space: f64 = choices.iter().map(|c| c.len() as f64).product();
    if space > ENUMERATION_GUARD {
        return Err(Error::TooLarge(format!(
            "{space:.3e} valid assignments exceed the enumeration guard {ENUMERATION_GUARD:.0e}"
        )));
    }

    let n_samples = instance.samples;
    let bins = instance.bins;
    let mut idx = vec![0usize; n_samples];
    let mut best_value = f64::NEG_INFINITY;
    let mut best_idx = idx.clone();
    let mut sum_lower = vec![0.0; bins];
    let mut sum_upper = vec![0.0; bins];

    loop {
        sum_lower.iter_mut().for_each(|s| *s = 0.0);
        sum_upper.iter_mut().for_each(|s| *s = 0.0);
        for n in 0..n_samples {
            let m = choices[n][idx[n]];
            let slot = instance.slot(n, m);
            sum_lower[m] += instance.correctness[n] - instance.lower[slot];
            sum_upper[m] += instance.correctness[n] - instance.upper[slot];
        }
        // Divide exactly as the objective does so the witness re-evaluates
        // to this value bit-for-bit.
        let value = (0..bins)
            .map(|m| sum_lower[m].abs().max(sum_upper[m].abs()))
            .sum::<f64>()
            / n_samples as f64;
        if value > best_value {
            best_value = value;
            best_idx.copy_from_slice(&idx);
        }

        // Odometer step over the accessible-bin choices.
        let mut n = n_samples;
        loop {
            if n == 0 {
                return Ok((best_value, witness(instance, &choices, &best_idx)));
            }
            n -= 1;
            idx[n] += 1;
            if idx[n] < choices[n].len() {
                break;
            }
            idx[n] = 0;
        }
    }
}

/// Rebuild the maximizing feasible point from its assignment choices.
fn witness(instance: &MipInstance, choices: &[Vec<usize>], idx: &[usize]) -> FeasiblePoint {
    let bins = instance.bins;
    let mut sum_lower = vec![0.0; bins];
    let mut sum_upper = vec![0.0; bins];
    let mut assignment = vec![0.0; instance.slot_count()];
    for n in 0..instance.samples {
        let m = choices[n][idx[n]];
        let slot = instance.slot(n, m);
        sum_lower[m] += instance.correctness[n] - instance.lower[slot];
        sum_upper[m] += instance.correctness[n] - instance.upper[slot];
        assignment[slot] = 1.0;
    }
    // Unassigned slots stay at their lower bounds, which is always in-box.
    let mut confidences = instance.lower.clone();
    for n in 0..instance.samples {
        let m = choices[n][idx[n]];
        let slot = instance.slot(n, m);
        confidences[slot] = if sum_lower[m].abs() >= sum_upper[m].abs() {
            instance.lower[slot]
        } else {
            instance.upper[slot]
        };
    }
    FeasiblePoint { assignment, confidences }
}

/// Check a claimed worst-case Brier score against its records: samples the
/// confidence boxes uniformly `trials` times with a seeded generator and
/// accepts iff no sampled Brier score exceeds `claimed + 1e-12` and the
/// closed-form extremal confidences attain `claimed` within `1e-12`.
pub fn verify_brier_bound(
    records: &[PredictionRecord],
    claimed: f64,
    trials: u32,
    seed: u64,
) -> Result<bool> {
    let worst = brier_worst_confidences(records)?;
    let bounds: Vec<(f64, f64)> = records.iter().map(|r| r.bounds_or_point()).collect();
    let targets: Vec<f64> =
        records.iter().map(|r| if r.correct { 1.0 } else { 0.0 }).collect();
    let n = records.len() as f64;

    let tlbs = |z: &[f64]| -> f64 {
        z.iter().zip(&targets).map(|(zi, ci)| (ci - zi) * (ci - zi)).sum::<f64>() / n
    };

    if (tlbs(&worst) - claimed).abs() > 1e-12 {
        return Ok(false);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = vec![0.0; records.len()];
    for _ in 0..trials {
        for (zi, &(lo, hi)) in z.iter_mut().zip(&bounds) {
            *zi = lo + (hi - lo) * rng.gen::<f64>();
        }
        if tlbs(&z) > claimed + 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Worst observed calibration error over a dense grid: each sample's
/// confidence ranges over `grid_points_per_dim` evenly spaced values in its
/// box and is binned naturally (hard binning of the grid value). A feasible
/// subset of the full program, so the result never exceeds
/// [`brute_force_cce`].
pub fn grid_cce(instance: &MipInstance, grid_points_per_dim: usize) -> Result<f64> {
    if grid_points_per_dim < 2 {
        return Err(Error::input("grid needs at least two points per dimension"));
    }
    let space = (grid_points_per_dim as f64).powi(instance.samples as i32);
    if space > ENUMERATION_GUARD {
        return Err(Error::TooLarge(format!(
            "{space:.3e} grid points exceed the enumeration guard {ENUMERATION_GUARD:.0e}"
        )));
    }

    // Per-sample grid values within the sample box (box = union of its
    // accessible slot boxes, i.e. the original certificate interval).
    let grids: Vec<Vec<f64>> = (0..instance.samples)
        .map(|n| {
            let lo = instance
                .accessible_bins(n)
                .map(|m| instance.lower[instance.slot(n, m)])
                .fold(f64::INFINITY, f64::min);
            let hi = instance
                .accessible_bins(n)
                .map(|m| instance.upper[instance.slot(n, m)])
                .fold(f64::NEG_INFINITY, f64::max);
            (0..grid_points_per_dim)
                .map(|t| lo + (hi - lo) * t as f64 / (grid_points_per_dim - 1) as f64)
                .collect()
        })
        .collect();

    let mut idx = vec![0usize; instance.samples];
    let mut best = f64::NEG_INFINITY;
    let mut gaps = vec![0.0; instance.bins];
    loop {
        gaps.iter_mut().for_each(|g| *g = 0.0);
        for n in 0..instance.samples {
            let z = grids[n][idx[n]];
            gaps[instance.binning.bin_index(z)] += instance.correctness[n] - z;
        }
        let value = gaps.iter().map(|g| g.abs()).sum::<f64>() / instance.samples as f64;
        best = best.max(value);

        let mut n = instance.samples;
        loop {
            if n == 0 {
                return Ok(best);
            }
            n -= 1;
            idx[n] += 1;
            if idx[n] < grids[n].len() {
                break;
            }
            idx[n] = 0;
        }
    }
}

/// Witness consistency: the returned maximizer evaluates back to the
/// returned value exactly.
pub fn check_witness(instance: &MipInstance, cce: f64, point: &FeasiblePoint) -> Result<()> {
    let value = objective(instance, point)?;
    if value != cce {
        return Err(Error::InfeasiblePoint(format!(
            "witness evaluates to {value}, not the reported {cce}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brier::certified_brier;
    use crate::metrics::{compute_ece, BinningScheme};
    use crate::mip::build_instance;

    fn worked_records() -> Vec<PredictionRecord> {
        vec![
            PredictionRecord::new("s1", 0.25, true).with_bounds(0.1, 0.6),
            PredictionRecord::new("s2", 0.8, false).with_bounds(0.5, 0.9),
        ]
    }

    fn worked_instance() -> MipInstance {
        let scheme = BinningScheme::equal_width(3).unwrap();
        build_instance(&worked_records(), &scheme).unwrap()
    }

    #[test]
    fn worked_instance_brute_force_is_exact() {
        let instance = worked_instance();
        let (cce, argmax) = brute_force_cce(&instance).unwrap();
        assert_eq!(cce, 0.9);
        // Witness: sample 1 in bin 0 at its lower bound, sample 2 in bin 2
        // at its upper bound.
        assert_eq!(argmax.assignment, vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(argmax.confidences[0], 0.1);
        assert_eq!(argmax.confidences[5], 0.9);
        check_witness(&instance, cce, &argmax).unwrap();
    }

    #[test]
    fn single_sample_full_box_maxes_out() {
        let records = vec![PredictionRecord::new("only", 0.7, true).with_bounds(0.0, 1.0)];
        let scheme = BinningScheme::equal_width(2).unwrap();
        let instance = build_instance(&records, &scheme).unwrap();
        let (cce, argmax) = brute_force_cce(&instance).unwrap();
        assert_eq!(cce, 1.0);
        assert_eq!(argmax.assignment, vec![1.0, 0.0]);
        assert_eq!(argmax.confidences[0], 0.0);
    }

    #[test]
    fn degenerate_boxes_reduce_to_plain_ece() {
        let records = vec![
            PredictionRecord::new("a", 0.25, true).with_bounds(0.25, 0.25),
            PredictionRecord::new("b", 0.75, false).with_bounds(0.75, 0.75),
            PredictionRecord::new("c", 0.5, true).with_bounds(0.5, 0.5),
        ];
        let scheme = BinningScheme::equal_width(4).unwrap();
        let instance = build_instance(&records, &scheme).unwrap();
        let (cce, argmax) = brute_force_cce(&instance).unwrap();
        let report = compute_ece(&records, &scheme).unwrap();
        assert!((cce - report.ece).abs() < 1e-12);
        check_witness(&instance, cce, &argmax).unwrap();
    }

    #[test]
    fn enumeration_guard_trips() {
        let records: Vec<PredictionRecord> = (0..24)
            .map(|i| PredictionRecord::new(format!("r{i}"), 0.5, i % 2 == 0).with_bounds(0.0, 1.0))
            .collect();
        let scheme = BinningScheme::equal_width(2).unwrap();
        let instance = build_instance(&records, &scheme).unwrap();
        assert!(matches!(brute_force_cce(&instance), Err(Error::TooLarge(_))));
    }

    #[test]
    fn vertex_maximization_matches_grid_search() {
        // Bin-local subproblem: maximize |sum_i (c_i - z_i)| over a box.
        // The sum is decreasing in every coordinate, so the optimum is at
        // the all-lower or all-upper vertex; a 10-point grid per coordinate
        // (endpoints included) must agree exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let k = rng.gen_range(1..=4usize);
            let c: Vec<f64> = (0..k).map(|_| f64::from(rng.gen::<bool>())).collect();
            let boxes: Vec<(f64, f64)> = (0..k)
                .map(|_| {
                    let lo = rng.gen::<f64>();
                    let hi = lo + (1.0 - lo) * rng.gen::<f64>();
                    (lo, hi)
                })
                .collect();
            let s_lower: f64 = (0..k).map(|i| c[i] - boxes[i].0).sum();
            let s_upper: f64 = (0..k).map(|i| c[i] - boxes[i].1).sum();
            let vertex = s_lower.abs().max(s_upper.abs());

            let mut idx = vec![0usize; k];
            let mut grid_best = f64::NEG_INFINITY;
            'outer: loop {
                let s: f64 = (0..k)
                    .map(|i| {
                        let (lo, hi) = boxes[i];
                        c[i] - (lo + (hi - lo) * idx[i] as f64 / 9.0)
                    })
                    .sum();
                grid_best = grid_best.max(s.abs());
                let mut i = k;
                loop {
                    if i == 0 {
                        break 'outer;
                    }
                    i -= 1;
                    idx[i] += 1;
                    if idx[i] < 10 {
                        break;
                    }
                    idx[i] = 0;
                }
            }
            assert!((vertex - grid_best).abs() <= 1e-12, "vertex {vertex} vs grid {grid_best}");
        }
    }

    #[test]
    fn grid_cce_on_the_worked_instance_hits_the_optimum() {
        // The optimum sits at box endpoints, which a 2-point grid includes.
        let instance = worked_instance();
        assert_eq!(grid_cce(&instance, 2).unwrap(), 0.9);
    }

    #[test]
    fn grid_cce_never_exceeds_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        for round in 0..20 {
            let n = rng.gen_range(2..=5usize);
            let m = rng.gen_range(2..=4usize);
            let records: Vec<PredictionRecord> = (0..n)
                .map(|i| {
                    let lo = rng.gen::<f64>();
                    let hi = lo + (1.0 - lo) * rng.gen::<f64>();
                    let conf = lo + (hi - lo) * rng.gen::<f64>();
                    PredictionRecord::new(format!("r{round}-{i}"), conf, rng.gen::<bool>())
                        .with_bounds(lo, hi)
                })
                .collect();
            let scheme = BinningScheme::equal_width(m).unwrap();
            let instance = build_instance(&records, &scheme).unwrap();
            let (cce, argmax) = brute_force_cce(&instance).unwrap();
            check_witness(&instance, cce, &argmax).unwrap();
            let grid = grid_cce(&instance, 7).unwrap();
            assert!(
                grid <= cce + 1e-12,
                "round {round}: grid {grid} exceeds brute force {cce}"
            );
        }
    }

    #[test]
    fn grid_cce_degenerate_boxes_equal_fixed_ece() {
        let records = vec![
            PredictionRecord::new("a", 0.3, true).with_bounds(0.3, 0.3),
            PredictionRecord::new("b", 0.9, false).with_bounds(0.9, 0.9),
        ];
        let scheme = BinningScheme::equal_width(5).unwrap();
        let instance = build_instance(&records, &scheme).unwrap();
        let report = compute_ece(&records, &scheme).unwrap();
        assert!((grid_cce(&instance, 3).unwrap() - report.ece).abs() < 1e-12);
    }

    #[test]
    fn grid_guard_trips() {
        let records: Vec<PredictionRecord> = (0..10)
            .map(|i| PredictionRecord::new(format!("r{i}"), 0.5, true).with_bounds(0.2, 0.8))
            .collect();
        let scheme = BinningScheme::equal_width(2).unwrap();
        let instance = build_instance(&records, &scheme).unwrap();
        assert!(matches!(grid_cce(&instance, 12), Err(Error::TooLarge(_))));
    }

    #[test]
    fn brier_verification_accepts_the_true_bound() {
        let records = worked_records();
        let claimed = certified_brier(&records).unwrap();
        assert!((claimed - 0.81).abs() < 1e-12);
        assert!(verify_brier_bound(&records, claimed, 1000, 7).unwrap());
    }

    #[test]
    fn brier_verification_rejects_a_stale_bound() {
        let records = worked_records();
        let claimed = certified_brier(&records).unwrap();
        // Shrinking the incorrect sample's upper bound strands the claim:
        // the new extremal point no longer attains it.
        let corrupted = vec![
            records[0].clone(),
            PredictionRecord::new("s2", 0.6, false).with_bounds(0.5, 0.7),
        ];
        assert!(!verify_brier_bound(&corrupted, claimed, 100, 7).unwrap());
    }

    #[test]
    fn brier_verification_rejects_an_understated_bound() {
        let records = worked_records();
        let claimed = certified_brier(&records).unwrap();
        assert!(!verify_brier_bound(&records, claimed - 0.05, 100, 7).unwrap());
    }

    #[test]
    fn oracle_dominates_natural_and_brier_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(515);
        for round in 0..20 {
            let n = rng.gen_range(2..=6usize);
            let m = rng.gen_range(2..=4usize);
            let records: Vec<PredictionRecord> = (0..n)
                .map(|i| {
                    let lo = rng.gen::<f64>();
                    let hi = lo + (1.0 - lo) * rng.gen::<f64>();
                    let conf = lo + (hi - lo) * rng.gen::<f64>();
                    PredictionRecord::new(format!("r{round}-{i}"), conf, rng.gen::<bool>())
                        .with_bounds(lo, hi)
                })
                .collect();
            let scheme = BinningScheme::equal_width(m).unwrap();
            let instance = build_instance(&records, &scheme).unwrap();
            let (cce, _) = brute_force_cce(&instance).unwrap();
            let natural = crate::mip::natural_point(&instance);
            let natural_value = objective(&instance, &natural).unwrap();
            assert!(natural_value <= cce + 1e-12);
        }
    }
}
