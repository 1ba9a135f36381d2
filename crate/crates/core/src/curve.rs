//! Sampled one-dimensional curves: the common currency between the
//! microcanonical, macroscopic and duality pipelines.

use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Micro,
    Macro,
    Synthetic,
}

/// A curve sampled on a strictly increasing abscissa grid.
///
/// Values are finite except for explicit `-inf` sentinels, which are only
/// allowed at the ends of the grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampledCurve {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<Vec<f64>>,
    pub meta: Provenance,
}

impl SampledCurve {
    pub fn new(x: Vec<f64>, y: Vec<f64>, stderr: Option<Vec<f64>>, meta: Provenance) -> Result<Self> {
        if x.len() != y.len() {
            return Err(LabError::Usage("x and y length mismatch".into()));
        }
        if x.len() < 2 {
            return Err(LabError::InsufficientData("curve needs at least 2 points".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::Usage("abscissae must be strictly increasing".into()));
        }
        if let Some(se) = &stderr {
            if se.len() != x.len() {
                return Err(LabError::Usage("stderr length mismatch".into()));
            }
        }
        // -inf sentinels may only sit at the ends.
        let first_fin = y.iter().position(|v| v.is_finite()).ok_or_else(|| {
            LabError::InsufficientData("curve has no finite values".into())
        })?;
        let last_fin = y.iter().rposition(|v| v.is_finite()).unwrap();
        for (i, v) in y.iter().enumerate() {
            if v.is_nan() || *v == f64::INFINITY {
                return Err(LabError::Usage(format!("non-finite value at index {i}")));
            }
            if *v == f64::NEG_INFINITY && i > first_fin && i < last_fin {
                return Err(LabError::Usage(format!("interior -inf at index {i}")));
            }
        }
        Ok(Self { x, y, stderr, meta })
    }

    /// Indices of finite samples.
    pub fn finite_indices(&self) -> Vec<usize> {
        (0..self.y.len()).filter(|&i| self.y[i].is_finite()).collect()
    }

    /// (x, y) restricted to finite samples.
    pub fn finite_points(&self) -> (Vec<f64>, Vec<f64>) {
        let idx = self.finite_indices();
        (
            idx.iter().map(|&i| self.x[i]).collect(),
            idx.iter().map(|&i| self.y[i]).collect(),
        )
    }

    /// Secant slopes between consecutive finite samples.
    pub fn secant_slopes(&self) -> Vec<f64> {
        let (x, y) = self.finite_points();
        x.windows(2)
            .zip(y.windows(2))
            .map(|(xs, ys)| (ys[1] - ys[0]) / (xs[1] - xs[0]))
            .collect()
    }

    /// Linear interpolation at `x0`; clamps outside the finite range.
    pub fn interpolate(&self, x0: f64) -> f64 {
        let (x, y) = self.finite_points();
        if x0 <= x[0] {
            return y[0];
        }
        if x0 >= x[x.len() - 1] {
            return y[y.len() - 1];
        }
        let j = x.partition_point(|&v| v < x0);
        let t = (x0 - x[j - 1]) / (x[j] - x[j - 1]);
        y[j - 1] + t * (y[j] - y[j - 1])
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.write_csv_named(path, "e")
    }

    /// Same format with a caller-chosen abscissa column name (e.g. "beta").
    pub fn write_csv_named(&self, path: &Path, x_name: &str) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([x_name, "value", "stderr", "flag"])?;
        for i in 0..self.x.len() {
            let se = self.stderr.as_ref().map_or(0.0, |s| s[i]);
            let flag = if self.y[i].is_finite() { "" } else { "no-data" };
            w.write_record([
                format!("{:.17e}", self.x[i]),
                format!("{:.17e}", self.y[i]),
                format!("{se:.17e}"),
                flag.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut se = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| LabError::Usage(format!("bad csv: {e}")))?;
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| LabError::Usage(format!("bad number in csv: {s:?}")))
            };
            x.push(parse(&rec[0])?);
            let flagged = rec.get(3).is_some_and(|f| !f.trim().is_empty());
            y.push(if flagged { f64::NEG_INFINITY } else { parse(&rec[1])? });
            se.push(rec.get(2).map_or(Ok(0.0), parse)?);
        }
        Self::new(x, y, Some(se), Provenance::Synthetic)
    }
}

impl std::ops::Index<usize> for SampledCurve {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.y[i]
    }
}

/// Uniform grid helper: `steps` points from `min` to `max` inclusive.
pub fn linspace(min: f64, max: f64, steps: usize) -> Vec<f64> {
    assert!(steps >= 2 && max > min);
    (0..steps)
        .map(|i| min + (max - min) * i as f64 / (steps - 1) as f64)
        .collect()
}

/// Logarithmically spaced grid from `min` to `max` (both > 0).
pub fn logspace(min: f64, max: f64, steps: usize) -> Vec<f64> {
    assert!(min > 0.0 && max > min);
    linspace(min.ln(), max.ln(), steps).into_iter().map(f64::exp).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(y: Vec<f64>) -> SampledCurve {
        let x = (0..y.len()).map(|i| i as f64).collect();
        SampledCurve::new(x, y, None, Provenance::Synthetic).unwrap()
    }

    #[test]
    fn rejects_interior_inf() {
        let x = vec![0.0, 1.0, 2.0];
        let y = vec![0.0, f64::NEG_INFINITY, 1.0];
        assert!(SampledCurve::new(x, y, None, Provenance::Synthetic).is_err());
    }

    #[test]
    fn accepts_end_sentinels() {
        let x = vec![0.0, 1.0, 2.0];
        let y = vec![f64::NEG_INFINITY, 0.0, 1.0];
        assert!(SampledCurve::new(x, y, None, Provenance::Synthetic).is_ok());
    }

    #[test]
    fn rejects_non_monotone_x() {
        let x = vec![0.0, 1.0, 1.0];
        let y = vec![0.0; 3];
        assert!(SampledCurve::new(x, y, None, Provenance::Synthetic).is_err());
    }

    #[test]
    fn interpolation_is_linear() {
        let c = curve(vec![0.0, 2.0, 4.0]);
        assert_eq!(c.interpolate(0.5), 1.0);
        assert_eq!(c.interpolate(-1.0), 0.0);
        assert_eq!(c.interpolate(5.0), 4.0);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let c = curve(vec![1.0, -0.5, 0.25]);
        c.write_csv(&path).unwrap();
        let back = SampledCurve::read_csv(&path).unwrap();
        assert_eq!(back.x, c.x);
        assert_eq!(back.y, c.y);
    }
}
