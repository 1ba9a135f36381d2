//! Structured pass/fail reports produced by the model checkers.

use serde::{Deserialize, Serialize};

/// Location at which a check was violated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum Witness {
    /// Scalar abscissa (radius, energy, ...).
    Scalar(f64),
    /// Index into the grid or point list handed to the checker.
    Index(usize),
    /// A point in R^d.
    Point(Vec<f64>),
    /// A pair of points (used by the two-variable disc check).
    Pair(Vec<f64>, Vec<f64>),
}

/// One named check outcome. A failing entry always carries a witness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    /// Signed margin: distance to the pass/fail boundary (negative = violated).
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub entries: Vec<CheckEntry>,
}

impl ValidationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_pass(&mut self, name: impl Into<String>, margin: f64) {
        self.entries.push(CheckEntry {
            name: name.into(),
            pass: true,
            witness: None,
            margin,
            note: None,
        });
    }

    pub fn push_fail(&mut self, name: impl Into<String>, witness: Witness, margin: f64) {
        self.entries.push(CheckEntry {
            name: name.into(),
            pass: false,
            witness: Some(witness),
            margin,
            note: None,
        });
    }

    pub fn push(&mut self, entry: CheckEntry) {
        self.entries.push(entry);
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    /// Witnesses of all failing entries.
    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }

    /// Serialize with stable field order (serde preserves struct order).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failing_entry_carries_witness() {
        let mut r = ValidationReport::new();
        r.push_fail("x", Witness::Scalar(1.0), -0.5);
        assert!(!r.passed());
        assert!(r.failures().all(|e| e.witness.is_some()));
    }

    #[test]
    fn json_round_trip() {
        let mut r = ValidationReport::new();
        r.push_pass("a", 0.1);
        r.push_fail("b", Witness::Index(3), -1.0);
        let s = r.to_json();
        let back: ValidationReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back.entries.len(), 2);
        assert_eq!(back.entries[1].witness, Some(Witness::Index(3)));
    }
}
