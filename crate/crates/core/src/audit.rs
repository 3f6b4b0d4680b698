use serde::Serialize;

/// Outcome of a sampled numerical check. `worst_margin` is `bound − observed`
/// at the sample where the check came closest to failing (negative on failure).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub pass: bool,
    pub checked: usize,
    pub failures: usize,
    pub worst_margin: f64,
    pub worst_lag: Vec<f64>,
    /// `(k, ℓ)` entry, zero-based.
    pub worst_entry: (usize, usize),
}

impl AuditReport {
    pub(crate) fn new() -> Self {
        Self {
            pass: true,
            checked: 0,
            failures: 0,
            worst_margin: f64::INFINITY,
            worst_lag: Vec::new(),
            worst_entry: (0, 0),
        }
    }

    pub(crate) fn record(&mut self, margin: f64, lag: &[f64], entry: (usize, usize)) {
        self.checked += 1;
        let margin = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
        if margin < 0.0 {
            self.failures += 1;
            self.pass = false;
        }
        if margin < self.worst_margin || self.worst_lag.is_empty() {
            self.worst_margin = margin;
            self.worst_lag = lag.to_vec();
            self.worst_entry = entry;
        }
    }
}
