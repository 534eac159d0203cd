//! The full pipeline: ingest certified predictions from a JSONL file,
//! sweep a radius grid, and emit a report. At each radius only the samples
//! whose certified radius reaches that far are kept, their boxes widen,
//! and the worst-case metrics climb while coverage falls.
//!
//! Run with `cargo run --example radius_sweep`. The same run is available
//! as `calicert report --input <file> --radii 0,0.1,0.25,0.5`.

use std::io::Write;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use calicert::pipeline::{plot_csv, run_pipeline, RunConfig};

fn main() -> calicert::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // 150 records shaped like a smoothing run: per-sample certified radius
    // and a sigma, so the pipeline widens each confidence with the
    // standard certificate at every swept radius.
    let path = std::env::temp_dir().join("calicert_radius_sweep.jsonl");
    let mut file = std::fs::File::create(&path).expect("temp file");
    for i in 0..150 {
        let conf: f64 = (0.7 + 0.25 * rng.gen::<f64>()).clamp(0.0, 1.0);
        let radius = 0.6 * rng.gen::<f64>();
        let correct = rng.gen_bool(conf * 0.95);
        writeln!(
            file,
            "{{\"id\":\"s{i}\",\"confidence\":{conf},\"correct\":{correct},\
             \"radius\":{radius},\"sigma\":0.25}}"
        )
        .expect("write record");
    }
    drop(file);

    let config = RunConfig {
        input: Some(path.clone()),
        radii: vec![0.0, 0.1, 0.25, 0.5],
        ..RunConfig::default()
    };
    let report = run_pipeline(&config)?;

    println!(
        "{:>7} {:>6} {:>9} {:>8} {:>8} {:>8} {:>8}",
        "radius", "count", "cert acc", "ece", "tlbs", "cbs", "acce"
    );
    for row in &report.rows {
        let fmt = |v: Option<f64>| match v {
            Some(v) => format!("{v:.4}"),
            None => "-".into(),
        };
        println!(
            "{:>7.2} {:>6} {:>9} {:>8} {:>8} {:>8} {:>8}",
            row.radius,
            row.certified_count,
            fmt(row.certified_accuracy),
            fmt(row.ece),
            fmt(row.tlbs),
            fmt(row.cbs),
            fmt(row.acce_admm),
        );
    }

    println!();
    println!("flat table for plotting (first rows):");
    for line in plot_csv(&report).lines().take(6) {
        println!("  {line}");
    }
    std::fs::remove_file(&path).ok();
    Ok(())
}
