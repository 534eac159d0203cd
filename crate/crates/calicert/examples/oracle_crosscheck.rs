//! Trust, then verify: at toy sizes the worst-case ECE program can be
//! enumerated exactly, which turns the heuristic solver into a measured
//! quantity. Every reported point is also checked for exact feasibility,
//! so a solver bug cannot hide behind an optimistic objective.
//!
//! Run with `cargo run --example oracle_crosscheck`.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use calicert::admm::{acce_ensemble, evaluation_grid, AdmmConfig};
use calicert::metrics::BinningScheme;
use calicert::mip::{build_instance, check_feasibility};
use calicert::oracle::brute_force_cce;
use calicert::records::PredictionRecord;

fn main() -> calicert::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let grid = evaluation_grid(&AdmmConfig::default());

    println!("{:>4} {:>3} {:>3} {:>10} {:>10} {:>8}", "inst", "n", "m", "oracle", "solver", "ratio");
    let mut exact = 0;
    let total = 20;
    for idx in 0..total {
        let n = rng.gen_range(2..=8usize);
        let m = rng.gen_range(2..=4usize);
        let records: Vec<PredictionRecord> = (0..n)
            .map(|i| {
                let lo = rng.gen::<f64>();
                let hi = lo + (1.0 - lo) * rng.gen::<f64>();
                let conf = lo + (hi - lo) * rng.gen::<f64>();
                PredictionRecord::new(format!("r{i}"), conf, rng.gen::<bool>())
                    .with_bounds(lo, hi)
            })
            .collect();
        let scheme = BinningScheme::equal_width(m)?;
        let instance = build_instance(&records, &scheme)?;

        let (cce, _) = brute_force_cce(&instance)?;
        let report = acce_ensemble(&instance, &grid)?;
        let residuals = check_feasibility(
            &instance,
            &report.best_point.assignment,
            &report.best_point.confidences,
        );
        assert_eq!(residuals.max_violation(), 0.0, "reported point must be feasible");
        assert!(report.best_acce <= cce + 1e-9, "a feasible point cannot beat the oracle");

        let ratio = if cce > 0.0 { report.best_acce / cce } else { 1.0 };
        if (report.best_acce - cce).abs() <= 1e-3 {
            exact += 1;
        }
        println!(
            "{idx:>4} {n:>3} {m:>3} {cce:>10.6} {:>10.6} {ratio:>8.4}",
            report.best_acce
        );
    }
    println!();
    println!("{exact}/{total} instances matched the oracle within 1e-3");
    Ok(())
}
