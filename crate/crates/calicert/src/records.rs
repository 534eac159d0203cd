use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack for confidences that drift out of [0, 1] through float noise in
/// upstream certificate math. Inside the slack we clamp; beyond it we reject.
pub const CONFIDENCE_SLACK: f64 = 1e-9;

/// Check a probability-like value and clamp float noise into [0, 1].
/// `what` names the field in the error message.
pub fn unit_interval(x: f64, what: &str) -> Result<f64> {
    if !x.is_finite() || !(-CONFIDENCE_SLACK..=1.0 + CONFIDENCE_SLACK).contains(&x) {
        return Err(Error::Input(format!("{what} = {x} is outside [0, 1]")));
    }
    Ok(x.clamp(0.0, 1.0))
}

/// One certified prediction: top-label confidence, correctness, and whatever
/// certificate data came with it.
///
/// `lower`/`upper` are the confidence bounds at the radius of interest;
/// `radius` is the label-invariance radius; `sigma` is kept when bounds are
/// to be derived on the fly from the smoothing scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub confidence: f64,
    pub correct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Input fields we do not interpret, preserved so emitted records echo
    /// them back.
    #[serde(flatten, default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl PredictionRecord {
    pub fn new(id: impl Into<String>, confidence: f64, correct: bool) -> Self {
        PredictionRecord {
            id: id.into(),
            confidence,
            correct,
            radius: None,
            lower: None,
            upper: None,
            sigma: None,
            extra: serde_json::Map::new(),
        }
    }

    pub fn with_bounds(mut self, lower: f64, upper: f64) -> Self {
        self.lower = Some(lower);
        self.upper = Some(upper);
        self
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = Some(radius);
        self
    }

    /// Validate and clamp in place. Confidence and bounds may sit within
    /// [`CONFIDENCE_SLACK`] outside the unit interval; anything further out
    /// is rejected.
    pub fn sanitize(&mut self) -> Result<()> {
        let id = &self.id;
        self.confidence = unit_interval(self.confidence, &format!("record {id}: confidence"))?;
        if let Some(l) = self.lower {
            self.lower = Some(unit_interval(l, &format!("record {id}: lower"))?);
        }
        if let Some(u) = self.upper {
            self.upper = Some(unit_interval(u, &format!("record {id}: upper"))?);
        }
        if self.lower.is_some() != self.upper.is_some() {
            return Err(Error::Input(format!(
                "record {id}: lower and upper must be given together"
            )));
        }
        if let (Some(l), Some(u)) = (self.lower, self.upper) {
            if l > u {
                return Err(Error::Input(format!(
                    "record {id}: lower {l} exceeds upper {u}"
                )));
            }
            if self.confidence < l - CONFIDENCE_SLACK || self.confidence > u + CONFIDENCE_SLACK {
                return Err(Error::Input(format!(
                    "record {id}: confidence {} outside certified bounds [{l}, {u}]",
                    self.confidence
                )));
            }
            self.confidence = self.confidence.clamp(l, u);
        }
        if let Some(r) = self.radius {
            if !r.is_finite() || r < 0.0 {
                return Err(Error::Input(format!("record {id}: radius {r} is negative")));
            }
        }
        if let Some(s) = self.sigma {
            if !s.is_finite() || s <= 0.0 {
                return Err(Error::Input(format!(
                    "record {id}: sigma {s} must be positive"
                )));
            }
        }
        Ok(())
    }

    /// Certificate box for this record, defaulting to the degenerate box at
    /// the observed confidence when no bounds are present.
    pub fn bounds_or_point(&self) -> (f64, f64) {
        match (self.lower, self.upper) {
            (Some(l), Some(u)) => (l, u),
            _ => (self.confidence, self.confidence),
        }
    }
}
