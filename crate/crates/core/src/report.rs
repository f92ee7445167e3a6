//! Shared helpers for CSV/JSON report emission.

use serde::Serialize;

/// Format a float with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Metadata attached to every emitted report.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
}

impl Provenance {
    pub fn new() -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            seed: None,
            reps: None,
            truncation: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_reps(mut self, reps: usize) -> Self {
        self.reps = Some(reps);
        self
    }

    pub fn with_truncation(mut self, k: usize) -> Self {
        self.truncation = Some(k);
        self
    }
}

impl Default for Provenance {
    fn default() -> Self {
        Self::new()
    }
}
