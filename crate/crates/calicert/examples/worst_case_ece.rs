//! Worst-case ECE as an optimization problem. Two certified samples are
//! enough to see the mechanics: the program merges each confidence box
//! with each bin, masks inaccessible slots, and the solver finds the
//! adversary's assignment. The clean ECE badly understates the exposure.
//!
//! Run with `cargo run --example worst_case_ece`.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use calicert::admm::{multi_start_solve, AdmmConfig};
use calicert::metrics::{compute_ece, BinningScheme};
use calicert::mip::{build_instance, check_feasibility};
use calicert::records::PredictionRecord;

fn main() -> calicert::Result<()> {
    // One correct prediction at 0.25 that may drift in [0.1, 0.6], one
    // wrong prediction at 0.8 that may drift in [0.5, 0.9].
    let records = vec![
        PredictionRecord::new("s1", 0.25, true).with_bounds(0.1, 0.6),
        PredictionRecord::new("s2", 0.8, false).with_bounds(0.5, 0.9),
    ];
    let scheme = BinningScheme::equal_width(3)?;
    let instance = build_instance(&records, &scheme)?;

    println!("program over {} samples x {} bins", instance.samples, instance.bins);
    println!("{:>6} {:>5} {:>8} {:>8} {:>12}", "sample", "bin", "lower", "upper", "accessible");
    for n in 0..instance.samples {
        for m in 0..instance.bins {
            let slot = instance.slot(n, m);
            println!(
                "{n:>6} {m:>5} {:>8.3} {:>8.3} {:>12}",
                instance.lower[slot],
                instance.upper[slot],
                !instance.inaccessible[slot]
            );
        }
    }

    let clean = compute_ece(&records, &scheme)?.ece;
    let solved = multi_start_solve(&instance, &AdmmConfig::default())?;
    let residuals = check_feasibility(
        &instance,
        &solved.best_point.assignment,
        &solved.best_point.confidences,
    );
    println!();
    println!("clean ece        {clean:.4}");
    println!("worst-case ece   {:.4}  (feasible, max violation {})", solved.best_acce, residuals.max_violation());
    println!("adversary's confidences:");
    for n in 0..instance.samples {
        for m in 0..instance.bins {
            let slot = instance.slot(n, m);
            if solved.best_point.assignment[slot] == 1.0 {
                println!("  sample {n} -> bin {m} at confidence {:.4}", solved.best_point.confidences[slot]);
            }
        }
    }

    // The same gap on something dataset-shaped: 120 samples under one
    // smoothing level, boxes from the certificate at radius 0.25.
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let bigger: Vec<PredictionRecord> = (0..120)
        .map(|i| {
            let conf = (0.75 + 0.2 * rng.gen::<f64>()).clamp(0.0, 1.0);
            let cert = calicert::certify::standard_bound(conf, conf, 0.25, 0.5).unwrap();
            PredictionRecord::new(format!("d{i}"), conf, rng.gen_bool(conf))
                .with_bounds(cert.lower, cert.upper)
        })
        .collect();
    let scheme = BinningScheme::equal_width(15)?;
    let instance = build_instance(&bigger, &scheme)?;
    let clean = compute_ece(&bigger, &scheme)?.ece;
    let solved = multi_start_solve(&instance, &AdmmConfig::default())?;
    println!();
    println!("120 samples, radius 0.25: clean ece {clean:.4}, worst-case {:.4}", solved.best_acce);
    Ok(())
}
