use serde::{Deserialize, Serialize};

/// One closed-form prediction checked against a measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub predicted: f64,
    pub measured: f64,
    pub tolerance: f64,
    pub satisfied: bool,
    /// Reported for comparison only; `satisfied` carries no verdict.
    #[serde(default)]
    pub informational: bool,
}

impl BoundReport {
    /// `|measured − predicted| <= tolerance`
    pub fn equality(name: impl Into<String>, predicted: f64, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            predicted,
            measured,
            tolerance,
            satisfied: (measured - predicted).abs() <= tolerance,
            informational: false,
        }
    }

    /// `measured <= predicted + tolerance`
    pub fn upper(name: impl Into<String>, predicted: f64, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            predicted,
            measured,
            tolerance,
            satisfied: measured <= predicted + tolerance,
            informational: false,
        }
    }

    /// `measured >= predicted − tolerance`
    pub fn lower(name: impl Into<String>, predicted: f64, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            predicted,
            measured,
            tolerance,
            satisfied: measured >= predicted - tolerance,
            informational: false,
        }
    }

    /// A side-by-side comparison with no pass/fail meaning.
    pub fn info(name: impl Into<String>, predicted: f64, measured: f64) -> Self {
        Self {
            name: name.into(),
            predicted,
            measured,
            tolerance: 0.0,
            satisfied: true,
            informational: true,
        }
    }

    /// Signed deviation `measured − predicted`.
    pub fn deviation(&self) -> f64 {
        self.measured - self.predicted
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts() {
        assert!(BoundReport::equality("e", 1.0, 1.05, 0.1).satisfied);
        assert!(!BoundReport::equality("e", 1.0, 1.2, 0.1).satisfied);
        assert!(BoundReport::upper("u", 1.0, 1.05, 0.1).satisfied);
        assert!(!BoundReport::lower("l", 1.0, 0.8, 0.1).satisfied);
        assert!(BoundReport::info("i", 8.0, 13.3).satisfied);
    }
}
