//! From raw smoothing statistics to guarantees: the certified radius for
//! the predicted label, and two interval constructions for where the
//! confidence can move inside that radius.
//!
//! Run with `cargo run --example confidence_certificates`.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use calicert::certify::{
    cdf_bound, certified_radius, dkw_band, hoeffding_bound, standard_bound, uniform_thresholds,
    RadiusOutcome, Sided, SmoothingEvidence,
};

fn main() -> calicert::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    // 1000 noisy forward passes: the top class wins 950 votes, and its
    // confidence concentrates around 0.84.
    let n = 1000u64;
    let samples: Vec<f64> = (0..n)
        .map(|_| (0.84 + 0.05 * (rng.gen::<f64>() - 0.5)).clamp(0.0, 1.0))
        .collect();
    let evidence = SmoothingEvidence {
        n_samples: n,
        sigma: 0.25,
        alpha: 0.001,
        top_count: 950,
        runner_count: Some(30),
        mean_top_confidence: None,
        confidence_samples: Some(samples.clone()),
    };

    match certified_radius(&evidence)? {
        RadiusOutcome::Certified(radius) => {
            println!("certified radius  {radius:.4}  (sigma {})", evidence.sigma)
        }
        RadiusOutcome::Abstain => println!("abstained"),
    }

    let mean = evidence.mean_confidence()?;
    let (z_lo, z_hi) = hoeffding_bound(mean, n, evidence.alpha, Sided::Two)?;
    let band = dkw_band(&samples, evidence.alpha, &uniform_thresholds(50))?;

    println!("mean confidence   {mean:.4}, hoeffding interval [{z_lo:.4}, {z_hi:.4}]");
    println!();
    println!("{:>7} {:>20} {:>20}", "radius", "standard [l, u]", "cdf [l, u]");
    for radius in [0.0, 0.1, 0.25, 0.5] {
        let std = standard_bound(z_lo, z_hi, radius, evidence.sigma)?;
        let cdf = cdf_bound(&band, radius, evidence.sigma)?;
        println!(
            "{radius:>7.2} [{:>8.4}, {:>8.4}] [{:>8.4}, {:>8.4}]",
            std.lower, std.upper, cdf.lower, cdf.upper
        );
    }
    println!();
    println!("the cdf interval tracks the concentrated sample cloud; the");
    println!("standard interval pays for knowing only the mean.");

    // A borderline sample: 6 of 10 votes is not enough evidence at this
    // alpha, so the protocol refuses to certify instead of guessing.
    let weak = SmoothingEvidence {
        n_samples: 10,
        sigma: 0.25,
        alpha: 0.001,
        top_count: 6,
        runner_count: None,
        mean_top_confidence: Some(0.55),
        confidence_samples: None,
    };
    println!();
    match certified_radius(&weak)? {
        RadiusOutcome::Certified(radius) => println!("weak evidence certified at {radius:.4}?!"),
        RadiusOutcome::Abstain => println!("weak evidence (6/10 votes): abstain"),
    }
    Ok(())
}
