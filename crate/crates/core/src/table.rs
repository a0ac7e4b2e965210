//! Tabulated curves with CSV and JSON export.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{domain, Result};

/// Rows of `(abscissa, ordinates...)` reproducing one figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveTable {
    pub figure: String,
    pub abscissa: String,
    pub columns: Vec<String>,
    pub rows: Vec<(f64, Vec<f64>)>,
    /// Free-form `key = value` parameter echo.
    pub metadata: Vec<(String, String)>,
}

impl CurveTable {
    pub fn new(
        figure: impl Into<String>,
        abscissa: impl Into<String>,
        columns: Vec<String>,
        rows: Vec<(f64, Vec<f64>)>,
    ) -> Result<Self> {
        let table = Self {
            figure: figure.into(),
            abscissa: abscissa.into(),
            columns,
            rows,
            metadata: Vec::new(),
        };
        table.validate()?;
        Ok(table)
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.push((key.into(), value.to_string()));
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (i, (x, ys)) in self.rows.iter().enumerate() {
            if ys.len() != self.columns.len() {
                return Err(domain(format!("row {i} has {} cells, expected {}", ys.len(), self.columns.len())));
            }
            if !x.is_finite() || ys.iter().any(|y| !y.is_finite()) {
                return Err(domain(format!("row {i} contains a non-finite value")));
            }
        }
        if self.rows.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(domain("abscissa must be strictly increasing"));
        }
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|(_, ys)| ys[idx]).collect())
    }

    /// Row whose abscissa is within `tol` of `x`.
    pub fn row_at(&self, x: f64, tol: f64) -> Option<&[f64]> {
        self.rows
            .iter()
            .find(|(rx, _)| (rx - x).abs() <= tol)
            .map(|(_, ys)| ys.as_slice())
    }

    /// CSV with `#` comment lines for the figure name and metadata, then a
    /// header row and one line per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# figure = {}", self.figure);
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out.push_str(&self.abscissa);
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (x, ys) in &self.rows {
            out.push_str(&format_decimal(*x));
            for y in ys {
                out.push(',');
                out.push_str(&format_decimal(*y));
            }
            out.push('\n');
        }
        out
    }

    /// `{"figure", "metadata", "rows": [{column: value, ...}, ...]}`.
    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|(x, ys)| {
                let mut obj = Map::new();
                obj.insert(self.abscissa.clone(), Value::from(*x));
                for (c, y) in self.columns.iter().zip(ys) {
                    obj.insert(c.clone(), Value::from(*y));
                }
                Value::Object(obj)
            })
            .collect();
        let meta: Map<String, Value> = self
            .metadata
            .iter()
            .map(|(k, v)| (k.clone(), Value::from(v.as_str())))
            .collect();
        serde_json::json!({
            "figure": self.figure,
            "metadata": meta,
            "rows": rows,
        })
    }
}

/// Decimal (never exponent) notation with 15 significant digits.
pub fn format_decimal(x: f64) -> String {
    if x == 0.0 {
        return "0.0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (14 - magnitude).max(1) as usize;
    format!("{x:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan_and_unsorted_rows() {
        let cols = vec!["y".to_string()];
        assert!(CurveTable::new("t", "x", cols.clone(), vec![(0.0, vec![f64::NAN])]).is_err());
        assert!(CurveTable::new("t", "x", cols.clone(), vec![(1.0, vec![0.0]), (1.0, vec![0.0])]).is_err());
        assert!(CurveTable::new("t", "x", cols, vec![(0.0, vec![0.0, 1.0])]).is_err());
    }

    #[test]
    fn decimal_formatting_keeps_precision() {
        assert_eq!(format_decimal(0.5), "0.500000000000000");
        let s = format_decimal(1.234567890123456e-7);
        assert!(!s.contains('e'));
        let back: f64 = s.parse().unwrap();
        assert!((back - 1.234567890123456e-7).abs() < 1e-20);
        assert!(!format_decimal(-1234.5).contains('e'));
    }

    #[test]
    fn csv_and_json_layout() {
        let t = CurveTable::new("fig", "lambda", vec!["a".into(), "b".into()], vec![(0.0, vec![1.0, 2.0]), (0.5, vec![3.0, 4.0])])
            .unwrap()
            .with_meta("gain", 2.0);
        let csv = t.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "# figure = fig");
        assert_eq!(lines[1], "# gain = 2");
        assert_eq!(lines[2], "lambda,a,b");
        assert_eq!(lines.len(), 5);
        let json = t.to_json();
        assert_eq!(json["rows"][1]["b"], 4.0);
        assert_eq!(json["metadata"]["gain"], "2");
        assert_eq!(t.column("b").unwrap(), vec![2.0, 4.0]);
    }
}
