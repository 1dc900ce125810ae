//! Key-value fit reports with deterministic ordering.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use tapkin::mechanism::MechanismCall;
use tapkin::regress::{MechanismLineFit, RegressionFit, SelectionMetrics};

use crate::io::{fmt_g12, IoError};

/// Accumulates `key = value` lines; insertion order is emission order.
#[derive(Debug, Default)]
pub struct Report {
    lines: Vec<(String, String)>,
}

impl Report {
    pub fn new(tool: &str) -> Self {
        let mut r = Report::default();
        r.push("tool", tool);
        r.push("version", env!("CARGO_PKG_VERSION"));
        r
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn push_float(&mut self, key: &str, value: f64) {
        self.lines.push((key.to_string(), fmt_g12(value)));
    }

    pub fn add_fit(&mut self, fit: &RegressionFit) {
        if let Some(l) = fit.lambda_chosen {
            self.push_float("lambda_chosen", l);
        }
        for (i, term) in fit.terms.iter().enumerate() {
            self.push_float(&format!("beta.{}", term.label), fit.beta[i]);
            self.push(&format!("selected.{}", term.label), fit.selected[i]);
            if !term.unit.is_empty() {
                self.push(&format!("unit.{}", term.label), term.unit);
            }
        }
        self.push_float("intercept", fit.intercept);
        self.push_float("residual_rmse", fit.residual_rmse);
        if let Some(obj) = fit.objective {
            self.push_float("objective", obj);
        }
        self.push("oscillation_fallback", fit.oscillation_fallback);
        if let Some(curve) = &fit.cv_curve {
            for (l, e) in curve {
                self.push(&format!("cv.{}", fmt_g12(*l)), fmt_g12(*e));
            }
        }
    }

    pub fn add_metrics(&mut self, m: &SelectionMetrics) {
        match m.npv {
            Some(v) => self.push_float("npv", v),
            None => self.push("npv", "undefined"),
        }
        self.push_float("coef_rmse", m.coef_rmse);
    }

    pub fn add_mechanism_line(&mut self, line: &MechanismLineFit) {
        self.push_float("line.intercept", line.intercept);
        self.push_float("line.slope", line.slope);
        self.push("line.aligned_points", line.aligned_points);
        self.add_fit(&line.fit);
    }

    pub fn add_classification(&mut self, call: &MechanismCall) {
        self.push("verdict", format!("{:?}", call.verdict));
        self.push_float("corr_reactant1_product", call.corr_reactant1);
        self.push_float("corr_reactant2_product", call.corr_reactant2);
        self.push("notes", &call.notes);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        fs::write(path, self.render()).map_err(|source| IoError::Write {
            path: path.display().to_string(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_is_deterministic_text() {
        let mut a = Report::new("demo");
        a.push("seed", 7);
        a.push_float("x", 1.0 / 3.0);
        let mut b = Report::new("demo");
        b.push("seed", 7);
        b.push_float("x", 1.0 / 3.0);
        assert_eq!(a.render(), b.render());
        assert!(a.render().contains("x = 3.33333333333e-1"));
    }
}
