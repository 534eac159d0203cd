//! Certified Brier score: the closed-form worst-case top-label Brier score
//! when every confidence may move freely inside its certificate box.
//!
//! The squared error (c_n - z_n)^2 is maximized per sample at the box vertex
//! farthest from the correctness target, so the bound needs no search: take
//! the lower bound when the prediction is correct, the upper bound when it
//! is not.

use crate::error::{Error, Result};
use crate::records::{unit_interval, PredictionRecord};

fn checked_bounds(record: &PredictionRecord) -> Result<(f64, f64)> {
    let id = &record.id;
    let (Some(l), Some(u)) = (record.lower, record.upper) else {
        return Err(Error::Input(format!(
            "record {id}: certified Brier score needs lower/upper bounds"
        )));
    };
    let l = unit_interval(l, &format!("record {id}: lower"))?;
    let u = unit_interval(u, &format!("record {id}: upper"))?;
    if l > u {
        return Err(Error::Input(format!(
            "record {id}: lower {l} exceeds upper {u}"
        )));
    }
    Ok((l, u))
}

/// Worst-case confidences: the box vertex farthest from each sample's
/// correctness target. These are both the attaining point of
/// [`certified_brier`] and the standard initialization/baseline for the
/// worst-case ECE solver.
pub fn brier_worst_confidences(records: &[PredictionRecord]) -> Result<Vec<f64>> {
    if records.is_empty() {
        return Err(Error::input("no records"));
    }
    records
        .iter()
        .map(|r| {
            let (l, u) = checked_bounds(r)?;
            Ok(if r.correct { l } else { u })
        })
        .collect()
}

/// Worst-case top-label Brier score over the certificate boxes:
/// N^-1 sum_n (c_n - (l_n if correct else u_n))^2.
pub fn certified_brier(records: &[PredictionRecord]) -> Result<f64> {
    let worst = brier_worst_confidences(records)?;
    let n = records.len() as f64;
    Ok(records
        .iter()
        .zip(&worst)
        .map(|(r, &z)| {
            let e = f64::from(r.correct) - z;
            e * e
        })
        .sum::<f64>()
        / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::compute_tlbs;

    fn rec(z: f64, correct: bool, l: f64, u: f64) -> PredictionRecord {
        PredictionRecord::new(format!("r{z}"), z, correct).with_bounds(l, u)
    }

    #[test]
    fn two_sample_worked_values() {
        let rs = vec![rec(0.23, true, 0.1, 0.6), rec(0.78, false, 0.5, 0.9)];
        assert_eq!(brier_worst_confidences(&rs).unwrap(), vec![0.1, 0.9]);
        assert!((certified_brier(&rs).unwrap() - 0.81).abs() < 1e-12);
    }

    #[test]
    fn degenerate_box_equals_tlbs() {
        let rs = vec![rec(0.3, true, 0.3, 0.3), rec(0.7, false, 0.7, 0.7)];
        let cbs = certified_brier(&rs).unwrap();
        let tlbs = compute_tlbs(&rs).unwrap();
        assert!((cbs - tlbs).abs() < 1e-15);
    }

    #[test]
    fn all_correct_zero_lower_is_maximal() {
        let rs = vec![rec(0.5, true, 0.0, 1.0), rec(0.9, true, 0.0, 1.0)];
        assert_eq!(certified_brier(&rs).unwrap(), 1.0);
    }

    #[test]
    fn all_incorrect_takes_upper() {
        let rs = vec![rec(0.2, false, 0.1, 0.4), rec(0.6, false, 0.5, 0.8)];
        assert_eq!(brier_worst_confidences(&rs).unwrap(), vec![0.4, 0.8]);
    }

    #[test]
    fn missing_bounds_rejected() {
        let rs = vec![PredictionRecord::new("a", 0.5, true)];
        assert!(certified_brier(&rs).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_bounded_records() -> impl Strategy<Value = Vec<PredictionRecord>> {
            prop::collection::vec(
                (0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0, any::<bool>()),
                1..20,
            )
            .prop_map(|rows| {
                rows.into_iter()
                    .enumerate()
                    .map(|(i, (a, b, t, c))| {
                        let (l, u) = if a <= b { (a, b) } else { (b, a) };
                        let z = l + t * (u - l);
                        PredictionRecord::new(format!("p{i}"), z, c).with_bounds(l, u)
                    })
                    .collect()
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(128))]

            #[test]
            fn widening_never_decreases(rs in arb_bounded_records(), grow in 0.0f64..0.3) {
                let base = certified_brier(&rs).unwrap();
                let widened: Vec<PredictionRecord> = rs
                    .iter()
                    .map(|r| {
                        let mut w = r.clone();
                        w.lower = Some((r.lower.unwrap() - grow).max(0.0));
                        w.upper = Some((r.upper.unwrap() + grow).min(1.0));
                        w
                    })
                    .collect();
                let wide = certified_brier(&widened).unwrap();
                prop_assert!(wide >= base - 1e-12);
            }

            #[test]
            fn attained_by_worst_confidences(rs in arb_bounded_records()) {
                let cbs = certified_brier(&rs).unwrap();
                let worst = brier_worst_confidences(&rs).unwrap();
                let at_worst: Vec<PredictionRecord> = rs
                    .iter()
                    .zip(&worst)
                    .map(|(r, &z)| PredictionRecord::new(r.id.clone(), z, r.correct))
                    .collect();
                let tlbs = compute_tlbs(&at_worst).unwrap();
                prop_assert!((tlbs - cbs).abs() < 1e-12);
            }
        }
    }
}
