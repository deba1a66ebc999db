use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Measured violation of an identity that holds exactly in the continuum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    pub identity: String,
    pub defect: f64,
    pub tolerance: f64,
    pub h: f64,
    pub alpha: f64,
    pub pass: bool,
    /// Length of history consumed by the time shifts involved.
    #[serde(default)]
    pub horizon_consumed: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

impl DefectReport {
    pub fn new(identity: impl Into<String>, defect: f64, tolerance: f64, h: f64, alpha: f64) -> Self {
        let defect = defect.abs();
        Self {
            identity: identity.into(),
            defect,
            tolerance,
            h,
            alpha,
            pass: defect <= tolerance,
            horizon_consumed: 0.0,
            details: BTreeMap::new(),
        }
    }

    pub fn with_horizon(mut self, consumed: f64) -> Self {
        self.horizon_consumed = consumed;
        self
    }

    pub fn with_detail(mut self, key: impl Into<String>, value: f64) -> Self {
        self.details.insert(key.into(), value);
        self
    }

    pub fn detail(&self, key: &str) -> Option<f64> {
        self.details.get(key).copied()
    }
}
