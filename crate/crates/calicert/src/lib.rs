//! Calibration metrics with certified worst-case bounds.
//!
//! Classifiers built on randomized smoothing give two guarantees per sample:
//! the predicted label is stable inside an l2 ball of radius R (C1), and the
//! top-label confidence stays inside an interval [l, u] under those same
//! perturbations (C2). This crate measures how badly calibrated a model can
//! be made by an adversary that moves every confidence freely inside its C2
//! box:
//!
//! * empirical metrics: ECE (equal-width bins), AdaECE (equal-count bins),
//!   top-label Brier score, reliability diagrams ([`metrics`])
//! * certificate math: certified radius from smoothing counts, Standard and
//!   CDF confidence bounds at a radius, Hoeffding/DKW bands ([`certify`])
//! * certified Brier score, the closed-form worst case ([`brier`])
//! * worst-case ECE as a mixed-integer program over bin assignments and
//!   bin-local confidences ([`mip`]), solved by an ADMM heuristic ([`admm`])
//!   and by a projected-gradient soft-binning baseline ([`dece`])
//! * a brute-force oracle for small instances ([`oracle`])
//! * dataset ingestion, radius sweeps, and report emission ([`pipeline`])
//!
//! Each capability has a runnable walkthrough:
//!
//! ```text
//! cargo run --example calibration_metrics
//! cargo run --example confidence_certificates
//! cargo run --example certified_brier
//! cargo run --example worst_case_ece
//! cargo run --example gradient_ascent_baseline
//! cargo run --example oracle_crosscheck
//! cargo run --example radius_sweep
//! cargo run --example solver_diagnostics
//! ```
//!
//! A thin `calicert` binary exposes the same flows as subcommands
//! (`metrics`, `certify`, `cbs`, `acce`, `dece`, `oracle`, `report`,
//! `diagnostics`); see the README.

pub mod admm;
pub mod brier;
pub mod certify;
pub mod dece;
pub mod error;
pub mod math;
pub mod metrics;
pub mod mip;
pub mod oracle;
pub mod pipeline;
pub mod records;

pub use error::{Error, Result};
pub use records::PredictionRecord;
