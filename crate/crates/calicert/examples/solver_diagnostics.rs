//! Reading the solver's trace. The default configuration hunts for the
//! largest worst-case ECE and sometimes orbits the constraint set instead
//! of settling; the tuned preset trades exploration for guaranteed
//! residual decay. The trace rows make the difference visible.
//!
//! Run with `cargo run --example solver_diagnostics`.

use calicert::admm::{solve, AdmmConfig, ZInit};
use calicert::metrics::BinningScheme;
use calicert::mip::build_instance;
use calicert::records::PredictionRecord;

fn main() -> calicert::Result<()> {
    let records = vec![
        PredictionRecord::new("s1", 0.25, true).with_bounds(0.1, 0.6),
        PredictionRecord::new("s2", 0.8, false).with_bounds(0.5, 0.9),
    ];
    let scheme = BinningScheme::equal_width(3)?;
    let instance = build_instance(&records, &scheme)?;

    for (name, config) in [
        ("default (exploratory)", AdmmConfig::default()),
        ("convergence-tuned", AdmmConfig::convergence_tuned()),
    ] {
        let config = AdmmConfig { z_init: ZInit::Brier, ..config };
        let report = solve(&instance, &config)?;
        println!("{name}");
        println!(
            "  best {:.4} at step {}, converged: {}, steps run: {}",
            report.best_acce, report.step_of_best, report.converged, report.steps_run
        );
        println!(
            "  {:>6} {:>12} {:>10} {:>10} {:>10} {:>10}",
            "step", "projected", "unique", "valid", "binary", "bounds"
        );
        for row in report
            .traces
            .iter()
            .filter(|r| r.step % 500 == 0 || r.step == report.steps_run)
        {
            println!(
                "  {:>6} {:>12.6} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e}",
                row.step,
                row.projected_ece,
                row.residuals.unique,
                row.residuals.valid,
                row.residuals.binary,
                row.residuals.bounds,
            );
        }
        println!();
    }

    println!("both find the optimum 0.9 here; the default keeps a residual");
    println!("orbit alive (the penalty ceiling caps the restoring force),");
    println!("while the tuned preset drives all four residuals under 1e-3.");
    println!("traces are also available as CSV: calicert diagnostics --input <file>");
    Ok(())
}
