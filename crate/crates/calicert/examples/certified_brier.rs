//! The certified Brier score in closed form: the exact worst-case
//! top-label Brier score when every confidence may move freely inside its
//! certified interval. Random search inside the boxes never beats it, and
//! the extremal confidences attain it.
//!
//! Run with `cargo run --example certified_brier`.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use calicert::brier::{brier_worst_confidences, certified_brier};
use calicert::certify::standard_bound;
use calicert::metrics::compute_tlbs;
use calicert::records::PredictionRecord;

fn main() -> calicert::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let sigma = 0.25;

    // 40 smoothed predictions, mostly correct, confidences near 0.8.
    let clean: Vec<PredictionRecord> = (0..40)
        .map(|i| {
            let conf = (0.8 + 0.1 * (rng.gen::<f64>() - 0.5)).clamp(0.0, 1.0);
            PredictionRecord::new(format!("s{i}"), conf, rng.gen_bool(0.8))
        })
        .collect();
    println!("clean top-label brier  {:.4}", compute_tlbs(&clean)?);
    println!();
    println!("{:>7} {:>10} {:>16} {:>12}", "radius", "certified", "best of 10k", "extremal");

    for radius in [0.0, 0.1, 0.25, 0.5] {
        let boxed: Vec<PredictionRecord> = clean
            .iter()
            .map(|r| {
                let cert = standard_bound(r.confidence, r.confidence, radius, sigma).unwrap();
                r.clone().with_bounds(cert.lower, cert.upper)
            })
            .collect();
        let certified = certified_brier(&boxed)?;

        // The adversary attacks each box independently; the worst case is
        // the farthest endpoint from the correctness label. Sampling only
        // ever approaches it from below.
        let mut best_sampled = f64::NEG_INFINITY;
        for _ in 0..10_000 {
            let tlbs = boxed
                .iter()
                .map(|r| {
                    let (lo, hi) = r.bounds_or_point();
                    let z = lo + (hi - lo) * rng.gen::<f64>();
                    let e = f64::from(r.correct) - z;
                    e * e
                })
                .sum::<f64>()
                / boxed.len() as f64;
            best_sampled = best_sampled.max(tlbs);
        }

        let worst = brier_worst_confidences(&boxed)?;
        let attained = boxed
            .iter()
            .zip(&worst)
            .map(|(r, &z)| {
                let e = f64::from(r.correct) - z;
                e * e
            })
            .sum::<f64>()
            / boxed.len() as f64;

        println!("{radius:>7.2} {certified:>10.4} {best_sampled:>16.4} {attained:>12.4}");
        assert!(best_sampled <= certified + 1e-12);
        assert!((attained - certified).abs() <= 1e-12);
    }
    Ok(())
}
