//! Rate-reactivity linear modelling: design-matrix construction, OLS, and
//! penalized fits (LASSO, SCAD) with cross-validated tuning.
//!
//! The reaction rate of a gas is expressed as a linear combination of its
//! thin-zone concentration, surface uptake, and their products:
//!
//! ```text
//! r = b_C C + b_U U + b_CU C.U + b_CU2 C.U^2 + b_U2 U^2
//! ```
//!
//! Fitting this form against transient data recovers the reactivity
//! coefficients; penalized fits additionally decide which interaction terms
//! are active.

mod linalg;
mod solver;

pub use solver::{cross_validate, fit_lasso, fit_scad, scad_threshold, CvOutcome, FoldStrategy};

use thiserror::Error;

use crate::features::{RCDSeries, TransientFeatures};

/// Coefficients below this magnitude count as exact zeros for selection.
pub const ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum RegressError {
    #[error("term '{0}' references gas '{1}' absent from the feature set")]
    MissingGas(String, String),
    #[error("term '{0}' produced an all-zero column; drop it from the term set")]
    VacuousTerm(String),
    #[error("column '{0}' contains a non-finite value at row {1}")]
    NonFinite(String, usize),
    #[error("series length mismatch: {0}")]
    LengthMismatch(String),
    #[error("need p <= n, got p = {p} columns and n = {n} rows")]
    Underdetermined { p: usize, n: usize },
    #[error(
        "design is numerically rank deficient (condition {cond:.3e}); collinear terms: {terms}"
    )]
    RankDeficient { cond: f64, terms: String },
    #[error("coordinate descent did not converge within {0} sweeps")]
    NonConvergence(usize),
    #[error("invalid penalty: {0}")]
    InvalidPenalty(String),
    #[error("mechanism line needs at least {min} aligned points, got {got}")]
    TooFewAligned { min: usize, got: usize },
    #[error("truth does not cover term '{0}'")]
    TruthMissing(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKind {
    C,
    U,
    CU,
    CU2,
    U2,
    Intercept,
    Custom,
}

/// One column of the rate-reactivity design.
#[derive(Debug, Clone, PartialEq)]
pub struct TermDescriptor {
    pub kind: TermKind,
    /// Gas whose series build the column; `None` for Intercept/Custom.
    pub gas: Option<String>,
    pub label: String,
    /// Coefficient unit: m/s for concentration terms, mol/s for uptake terms.
    pub unit: &'static str,
}

impl TermDescriptor {
    pub fn new(kind: TermKind, gas: &str) -> Self {
        let (tag, unit) = match kind {
            TermKind::C => ("C", "m/s"),
            TermKind::U => ("U", "mol/s"),
            TermKind::CU => ("CU", "mol/s"),
            TermKind::CU2 => ("CU2", "mol/s"),
            TermKind::U2 => ("U2", "mol/s"),
            TermKind::Intercept => ("1", "mol/s"),
            TermKind::Custom => ("custom", ""),
        };
        TermDescriptor {
            kind,
            gas: Some(gas.to_string()),
            label: format!("{tag}_{gas}"),
            unit,
        }
    }

    pub fn intercept() -> Self {
        TermDescriptor {
            kind: TermKind::Intercept,
            gas: None,
            label: "intercept".into(),
            unit: "mol/s",
        }
    }

    pub fn custom(label: &str) -> Self {
        TermDescriptor {
            kind: TermKind::Custom,
            gas: None,
            label: label.to_string(),
            unit: "",
        }
    }

    /// The five-term set of the full second-order rate expression.
    pub fn full_set(gas: &str) -> Vec<TermDescriptor> {
        [
            TermKind::C,
            TermKind::U,
            TermKind::CU,
            TermKind::CU2,
            TermKind::U2,
        ]
        .iter()
        .map(|&k| TermDescriptor::new(k, gas))
        .collect()
    }
}

/// Mean-centered design matrix in column-major storage.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub terms: Vec<TermDescriptor>,
    /// p columns of length n (centered when `centered` is set).
    pub columns: Vec<Vec<f64>>,
    pub response: Vec<f64>,
    pub col_means: Vec<f64>,
    pub response_mean: f64,
    pub centered: bool,
}

impl DesignMatrix {
    pub fn n(&self) -> usize {
        self.response.len()
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    /// Low-level constructor from prebuilt columns.
    pub fn from_columns(
        terms: Vec<TermDescriptor>,
        columns: Vec<Vec<f64>>,
        response: Vec<f64>,
        center: bool,
    ) -> Result<Self, RegressError> {
        let n = response.len();
        for (t, col) in terms.iter().zip(&columns) {
            if col.len() != n {
                return Err(RegressError::LengthMismatch(format!(
                    "column '{}' has {} rows, response has {n}",
                    t.label,
                    col.len()
                )));
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(RegressError::NonFinite(t.label.clone(), row));
            }
            if col.iter().all(|&v| v == 0.0) {
                return Err(RegressError::VacuousTerm(t.label.clone()));
            }
        }
        if let Some(row) = response.iter().position(|v| !v.is_finite()) {
            return Err(RegressError::NonFinite("response".into(), row));
        }
        let mut dm = DesignMatrix {
            terms,
            columns,
            response,
            col_means: Vec::new(),
            response_mean: 0.0,
            centered: center,
        };
        if center {
            let n_f = n as f64;
            for col in dm.columns.iter_mut() {
                let mean = col.iter().sum::<f64>() / n_f;
                for v in col.iter_mut() {
                    *v -= mean;
                }
                dm.col_means.push(mean);
            }
            dm.response_mean = dm.response.iter().sum::<f64>() / n_f;
            for v in dm.response.iter_mut() {
                *v -= dm.response_mean;
            }
        } else {
            dm.col_means = vec![0.0; dm.columns.len()];
        }
        Ok(dm)
    }

    /// Keeps only the given rows (used by cross-validation).
    pub fn subset(&self, rows: &[usize]) -> DesignMatrix {
        DesignMatrix {
            terms: self.terms.clone(),
            columns: self
                .columns
                .iter()
                .map(|col| rows.iter().map(|&r| col[r]).collect())
                .collect(),
            response: rows.iter().map(|&r| self.response[r]).collect(),
            col_means: self.col_means.clone(),
            response_mean: self.response_mean,
            centered: self.centered,
        }
    }

    pub fn predict(&self, beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (col, &b) in self.columns.iter().zip(beta) {
            if b == 0.0 {
                continue;
            }
            for (o, &v) in out.iter_mut().zip(col) {
                *o += b * v;
            }
        }
        out
    }
}

/// Builds the design matrix from per-gas features, constructing each column
/// pointwise from the term rule and mean-centering columns and response.
pub fn build_design_matrix(
    features: &[&TransientFeatures],
    terms: &[TermDescriptor],
    response: &[f64],
) -> Result<DesignMatrix, RegressError> {
    let n = response.len();
    let find = |term: &TermDescriptor| -> Result<&TransientFeatures, RegressError> {
        let gas = term
            .gas
            .as_ref()
            .ok_or_else(|| RegressError::MissingGas(term.label.clone(), "<none>".into()))?;
        features
            .iter()
            .find(|f| &f.gas_id == gas)
            .copied()
            .ok_or_else(|| RegressError::MissingGas(term.label.clone(), gas.clone()))
    };
    let mut columns = Vec::with_capacity(terms.len());
    for term in terms {
        let col: Vec<f64> = match term.kind {
            TermKind::Intercept => vec![1.0; n],
            TermKind::Custom => {
                return Err(RegressError::MissingGas(
                    term.label.clone(),
                    "custom terms need prebuilt columns".into(),
                ))
            }
            kind => {
                let f = find(term)?;
                if f.concentration.len() != n {
                    return Err(RegressError::LengthMismatch(format!(
                        "features of '{}' have {} rows, response has {n}",
                        f.gas_id,
                        f.concentration.len()
                    )));
                }
                (0..n)
                    .map(|k| {
                        let c = f.concentration[k];
                        let u = f.uptake[k];
                        match kind {
                            TermKind::C => c,
                            TermKind::U => u,
                            TermKind::CU => c * u,
                            TermKind::CU2 => c * u * u,
                            TermKind::U2 => u * u,
                            _ => unreachable!(),
                        }
                    })
                    .collect()
            }
        };
        columns.push(col);
    }
    DesignMatrix::from_columns(terms.to_vec(), columns, response.to_vec(), true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ols,
    Lasso,
    Scad,
}

/// Penalty and tuning configuration shared by the penalized fits.
#[derive(Debug, Clone)]
pub struct PenaltySpec {
    pub method: Method,
    /// Fixed penalty weight; when `None` the grid is tuned by k-fold CV.
    pub lambda: Option<f64>,
    /// SCAD concavity parameter, > 2.
    pub a: f64,
    pub cv_folds: usize,
    /// Strictly descending grid; `None` derives 50 log-spaced values from
    /// lambda_max down to 1e-4 lambda_max.
    pub lambda_grid: Option<Vec<f64>>,
    pub fold_strategy: FoldStrategy,
    pub seed: u64,
}

impl PenaltySpec {
    pub fn lasso() -> Self {
        PenaltySpec {
            method: Method::Lasso,
            lambda: None,
            a: 3.7,
            cv_folds: 10,
            lambda_grid: None,
            fold_strategy: FoldStrategy::ContiguousBlocks,
            seed: 0,
        }
    }

    pub fn scad() -> Self {
        PenaltySpec {
            method: Method::Scad,
            ..PenaltySpec::lasso()
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn validate(&self) -> Result<(), RegressError> {
        if let Some(l) = self.lambda {
            if !(l >= 0.0) {
                return Err(RegressError::InvalidPenalty(format!("lambda = {l}")));
            }
        }
        if self.method == Method::Scad && !(self.a > 2.0) {
            return Err(RegressError::InvalidPenalty(format!(
                "SCAD needs a > 2, got {}",
                self.a
            )));
        }
        if self.cv_folds < 2 {
            return Err(RegressError::InvalidPenalty(format!(
                "cv_folds must be >= 2, got {}",
                self.cv_folds
            )));
        }
        if let Some(grid) = &self.lambda_grid {
            let descending = grid.windows(2).all(|w| w[0] > w[1]);
            if grid.is_empty() || !descending || grid.iter().any(|&l| l <= 0.0) {
                return Err(RegressError::InvalidPenalty(
                    "lambda_grid must be strictly descending and positive".into(),
                ));
            }
        }
        Ok(())
    }
}

/// A fitted linear model.
#[derive(Debug, Clone)]
pub struct RegressionFit {
    pub terms: Vec<TermDescriptor>,
    pub beta: Vec<f64>,
    /// Intercept recovered in uncentered space (zero for uncentered designs
    /// without an intercept column).
    pub intercept: f64,
    pub selected: Vec<bool>,
    pub lambda_chosen: Option<f64>,
    /// (lambda, mean validation MSE) pairs from cross-validation.
    pub cv_curve: Option<Vec<(f64, f64)>>,
    pub residual_rmse: f64,
    /// Penalized objective at the returned iterate (penalized fits only).
    pub objective: Option<f64>,
    /// Largest objective increase observed across accepted sweeps.
    pub max_sweep_increase: f64,
    /// Set when SCAD oscillated and the best iterate was returned instead.
    pub oscillation_fallback: bool,
    pub sweeps: usize,
}

impl RegressionFit {
    pub(crate) fn finish(
        dm: &DesignMatrix,
        beta: Vec<f64>,
        lambda_chosen: Option<f64>,
        cv_curve: Option<Vec<(f64, f64)>>,
        objective: Option<f64>,
        max_sweep_increase: f64,
        oscillation_fallback: bool,
        sweeps: usize,
    ) -> Self {
        let fitted = dm.predict(&beta);
        let n = dm.n() as f64;
        let rss: f64 = dm
            .response
            .iter()
            .zip(&fitted)
            .map(|(y, f)| (y - f) * (y - f))
            .sum();
        let intercept = if dm.centered {
            dm.response_mean
                - beta
                    .iter()
                    .zip(&dm.col_means)
                    .map(|(b, m)| b * m)
                    .sum::<f64>()
        } else {
            0.0
        };
        let selected = beta.iter().map(|b| b.abs() > ZERO_TOL).collect();
        RegressionFit {
            terms: dm.terms.clone(),
            beta,
            intercept,
            selected,
            lambda_chosen,
            cv_curve,
            residual_rmse: (rss / n).sqrt(),
            objective,
            max_sweep_increase,
            oscillation_fallback,
            sweeps,
        }
    }

    pub fn coefficient(&self, label: &str) -> Option<f64> {
        self.terms
            .iter()
            .position(|t| t.label == label)
            .map(|i| self.beta[i])
    }
}

/// Ordinary least squares through the normal equations.
pub fn fit_ols(dm: &DesignMatrix) -> Result<RegressionFit, RegressError> {
    let (n, p) = (dm.n(), dm.p());
    if p > n {
        return Err(RegressError::Underdetermined { p, n });
    }
    let n_f = n as f64;
    let mut gram = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for i in 0..p {
        for j in i..p {
            let dot: f64 = dm.columns[i]
                .iter()
                .zip(&dm.columns[j])
                .map(|(a, b)| a * b)
                .sum();
            gram[i][j] = dot / n_f;
            gram[j][i] = dot / n_f;
        }
        xty[i] = dm.columns[i]
            .iter()
            .zip(&dm.response)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n_f;
    }
    let cond = linalg::condition_estimate(&gram);
    if !(cond < 1e12) {
        let terms = collinear_terms(&gram, &dm.terms);
        return Err(RegressError::RankDeficient { cond, terms });
    }
    let beta = linalg::cholesky_solve(&gram, &xty).map_err(|col| RegressError::RankDeficient {
        cond,
        terms: dm.terms[col].label.clone(),
    })?;
    Ok(RegressionFit::finish(
        dm, beta, None, None, None, 0.0, false, 0,
    ))
}

fn collinear_terms(gram: &[Vec<f64>], terms: &[TermDescriptor]) -> String {
    // name the terms dominating the smallest-eigenvalue direction
    let eig = linalg::symmetric_eigenvalues(gram.to_vec());
    let min_idx = eig
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    let _ = min_idx;
    // crude but serviceable: report the most correlated pair
    let p = gram.len();
    let mut best = (0, 0, 0.0);
    for i in 0..p {
        for j in i + 1..p {
            let denom = (gram[i][i] * gram[j][j]).sqrt().max(1e-300);
            let c = (gram[i][j] / denom).abs();
            if c > best.2 {
                best = (i, j, c);
            }
        }
    }
    format!("{} ~ {}", terms[best.0].label, terms[best.1].label)
}

/// Negative predictive value and coefficient error against known truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMetrics {
    /// true negatives / predicted negatives; `None` when the fit predicts no
    /// negatives at all (reported distinctly, not as zero).
    pub npv: Option<f64>,
    pub coef_rmse: f64,
}

/// Scores a fit against true coefficients, matched by term label.
pub fn compute_selection_metrics(
    fit: &RegressionFit,
    truth: &[(String, f64)],
) -> Result<SelectionMetrics, RegressError> {
    let mut true_neg = 0usize;
    let mut pred_neg = 0usize;
    let mut sq_sum = 0.0;
    for (i, term) in fit.terms.iter().enumerate() {
        let truth_beta = truth
            .iter()
            .find(|(l, _)| l == &term.label)
            .map(|(_, b)| *b)
            .ok_or_else(|| RegressError::TruthMissing(term.label.clone()))?;
        let predicted_zero = !fit.selected[i];
        let truly_zero = truth_beta.abs() <= ZERO_TOL;
        if predicted_zero {
            pred_neg += 1;
            if truly_zero {
                true_neg += 1;
            }
        }
        let d = fit.beta[i] - truth_beta;
        sq_sum += d * d;
    }
    let npv = if pred_neg == 0 {
        None
    } else {
        Some(true_neg as f64 / pred_neg as f64)
    };
    Ok(SelectionMetrics {
        npv,
        coef_rmse: (sq_sum / fit.terms.len() as f64).sqrt(),
    })
}

/// Result of regressing the CO quotient on the square-rooted oxygen quotient.
#[derive(Debug, Clone)]
pub struct MechanismLineFit {
    /// Intercept estimate: `N k+_CO` under a gas-surface (Eley-Rideal)
    /// pathway, zero under a surface-surface (Langmuir-Hinshelwood) pathway.
    pub intercept: f64,
    /// Raw slope estimate; its magnitude estimates `k+_CO / sqrt(k+_O)`.
    pub slope: f64,
    pub aligned_points: usize,
    pub fit: RegressionFit,
}

/// Minimum aligned samples required for the mechanism line.
pub const MIN_LINE_POINTS: usize = 50;

/// Fits `r_CO/C_CO = b0 + b1 sqrt(r_O2/C_O2)` over the intersection of
/// unmasked points, with the intercept column subject to the penalty like
/// any other coefficient.
pub fn fit_mechanism_line(
    rcd_co: &RCDSeries,
    rcd_o2_sqrt: &RCDSeries,
    pen: &PenaltySpec,
) -> Result<MechanismLineFit, RegressError> {
    pen.validate()?;
    if rcd_co.values.len() != rcd_o2_sqrt.values.len() {
        return Err(RegressError::LengthMismatch(format!(
            "CO series has {} points, O2 series {}",
            rcd_co.values.len(),
            rcd_o2_sqrt.values.len()
        )));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for k in 0..rcd_co.values.len() {
        if rcd_co.mask[k] && rcd_o2_sqrt.mask[k] {
            x.push(rcd_o2_sqrt.values[k]);
            y.push(rcd_co.values[k]);
        }
    }
    if x.len() < MIN_LINE_POINTS {
        return Err(RegressError::TooFewAligned {
            min: MIN_LINE_POINTS,
            got: x.len(),
        });
    }
    let n = x.len();
    let terms = vec![
        TermDescriptor::intercept(),
        TermDescriptor::custom(&format!("sqrt_rcd_{}", rcd_o2_sqrt.gas_id)),
    ];
    let dm = DesignMatrix::from_columns(terms, vec![vec![1.0; n], x], y, false)?;
    let fit = match pen.method {
        Method::Ols => fit_ols(&dm)?,
        Method::Lasso => fit_lasso(&dm, pen)?,
        Method::Scad => fit_scad(&dm, pen)?,
    };
    Ok(MechanismLineFit {
        intercept: fit.beta[0],
        slope: fit.beta[1],
        aligned_points: n,
        fit,
    })
}
