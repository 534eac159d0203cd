//! Observed calibration on a small synthetic model: ECE over equal-width
//! bins, AdaECE over equal-count bins, the top-label Brier score, and the
//! reliability rows behind the diagram.
//!
//! Run with `cargo run --example calibration_metrics`.

use calicert::metrics::{compute_adaece, compute_ece, compute_tlbs, BinningScheme};
use calicert::records::PredictionRecord;

fn main() -> calicert::Result<()> {
    // A model that is right often but systematically overconfident near the
    // top, the usual shape after softmax training.
    let data: &[(f64, bool)] = &[
        (0.97, true),
        (0.95, false),
        (0.93, true),
        (0.91, true),
        (0.88, false),
        (0.85, true),
        (0.82, true),
        (0.74, false),
        (0.71, true),
        (0.65, false),
        (0.58, true),
        (0.52, false),
    ];
    let records: Vec<PredictionRecord> = data
        .iter()
        .enumerate()
        .map(|(i, &(confidence, correct))| {
            PredictionRecord::new(format!("sample-{i}"), confidence, correct)
        })
        .collect();

    let scheme = BinningScheme::equal_width(10)?;
    let report = compute_ece(&records, &scheme)?;
    let adaece = compute_adaece(&records, 4)?;
    let tlbs = compute_tlbs(&records)?;

    println!("records        {}", records.len());
    println!("ece (10 bins)  {:.4}", report.ece);
    println!("adaece (4)     {:.4}", adaece.ece);
    println!("brier          {:.4}", tlbs);
    println!();
    println!("reliability (equal-width bins)");
    println!("{:>4} {:>6} {:>11} {:>9} {:>8}", "bin", "count", "confidence", "accuracy", "gap");
    for (i, row) in report.rows.iter().enumerate() {
        match (row.mean_confidence, row.accuracy, row.gap) {
            (Some(conf), Some(acc), Some(gap)) => {
                println!("{i:>4} {:>6} {conf:>11.3} {acc:>9.3} {gap:>8.3}", row.count);
            }
            _ => println!("{i:>4} {:>6} {:>11} {:>9} {:>8}", row.count, "-", "-", "-"),
        }
    }
    Ok(())
}
