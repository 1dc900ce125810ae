//! Rate-concentration dependency correlation (RCDC) structure, grid sweeps
//! over rate constants, and sign-based mechanism classification.
//!
//! Each gas is summarized by its rate-concentration dependency: the quotient
//! `r/C` for reactants (square-rooted when the surface step is second order)
//! and the rate alone for products. Pearson correlations between those
//! series discriminate gas-surface from surface-surface pathways: a
//! mutualistic (positive) correlation means two species fill the surface
//! together, a parasitic (negative) one means one consumes what the other
//! deposits.

use rayon::prelude::*;
use thiserror::Error;

use crate::features::{
    compute_rcd, extract_thin_zone_features, FeatureError, RCDSeries, Role, Transform,
};
use crate::reactor::{presets, simulate_pulse, MechanismSpec, ReactorConfig, SimError};

#[derive(Debug, Error)]
pub enum MechError {
    #[error("need at least {min} series, got {got}")]
    TooFewSeries { min: usize, got: usize },
    #[error("only {got} aligned unmasked points, need at least {min}")]
    TooFewAligned { min: usize, got: usize },
    #[error("series '{0}' has zero variance on the aligned window")]
    ZeroVariance(String),
    #[error("trim fraction must lie in [0, 0.25], got {0}")]
    BadTrim(f64),
    #[error("grid axis must be strictly increasing and positive")]
    BadAxis,
    #[error("correlation between '{0}' and '{1}' is undefined")]
    UndefinedCorrelation(String, String),
    #[error("{0}")]
    Feature(#[from] FeatureError),
    #[error("{0}")]
    Sim(#[from] SimError),
}

/// Minimum aligned samples for any correlation estimate.
pub const MIN_ALIGNED: usize = 50;

/// Pearson correlation matrix over rate-concentration dependency series.
#[derive(Debug, Clone)]
pub struct RCDCMatrix {
    pub labels: Vec<String>,
    /// Symmetric; `None` marks pairs with a zero-variance side.
    pub corr: Vec<Vec<Option<f64>>>,
    pub n_points: usize,
}

impl RCDCMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        self.corr[i][j]
    }
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va <= 0.0 || vb <= 0.0 {
        None
    } else {
        Some(cov / (va * vb).sqrt())
    }
}

/// Pairwise Pearson correlations over the intersection of unmasked points.
pub fn rcdc(series: &[&RCDSeries]) -> Result<RCDCMatrix, MechError> {
    if series.len() < 2 {
        return Err(MechError::TooFewSeries {
            min: 2,
            got: series.len(),
        });
    }
    let n = series[0].values.len();
    for s in series {
        if s.values.len() != n {
            return Err(MechError::TooFewAligned {
                min: n,
                got: s.values.len(),
            });
        }
    }
    let aligned: Vec<usize> = (0..n)
        .filter(|&k| series.iter().all(|s| s.mask[k]))
        .collect();
    if aligned.len() < MIN_ALIGNED {
        return Err(MechError::TooFewAligned {
            min: MIN_ALIGNED,
            got: aligned.len(),
        });
    }
    let values: Vec<Vec<f64>> = series
        .iter()
        .map(|s| aligned.iter().map(|&k| s.values[k]).collect())
        .collect();
    let m = series.len();
    let mut corr = vec![vec![None; m]; m];
    for i in 0..m {
        for j in i..m {
            let c = pearson(&values[i], &values[j]);
            corr[i][j] = c;
            corr[j][i] = c;
        }
    }
    Ok(RCDCMatrix {
        labels: series.iter().map(|s| s.gas_id.clone()).collect(),
        corr,
        n_points: aligned.len(),
    })
}

/// Winsorized Pearson correlation: both series are clamped at their
/// `(trim, 1 - trim)` quantiles before the plain estimate. `trim = 0`
/// reduces to ordinary Pearson exactly.
pub fn robust_correlation(a: &[f64], b: &[f64], trim: f64) -> Result<f64, MechError> {
    if !(0.0..=0.25).contains(&trim) {
        return Err(MechError::BadTrim(trim));
    }
    if a.len() != b.len() || a.len() < MIN_ALIGNED {
        return Err(MechError::TooFewAligned {
            min: MIN_ALIGNED,
            got: a.len().min(b.len()),
        });
    }
    let wa = winsorize(a, trim);
    let wb = winsorize(b, trim);
    pearson(&wa, &wb).ok_or_else(|| MechError::ZeroVariance("winsorized input".into()))
}

fn winsorize(x: &[f64], trim: f64) -> Vec<f64> {
    if trim == 0.0 {
        return x.to_vec();
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let n = sorted.len();
    let k = ((trim * n as f64).floor() as usize).min(n / 2);
    let lo = sorted[k];
    let hi = sorted[n - 1 - k];
    x.iter().map(|&v| v.clamp(lo, hi)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    EleyRideal,
    LangmuirHinshelwood,
    Indeterminate,
}

/// Classification evidence: the two reactant-to-product correlations.
#[derive(Debug, Clone)]
pub struct MechanismCall {
    pub verdict: Verdict,
    pub corr_reactant1: f64,
    pub corr_reactant2: f64,
    pub notes: String,
}

/// Tolerance on magnitude agreement for the opposite-sign (Eley-Rideal)
/// pattern.
pub const ER_MAGNITUDE_TOL: f64 = 0.1;

/// Sign rule over the two reactant-to-product correlations:
/// both negative is a surface-surface (Langmuir-Hinshelwood) signature;
/// opposite signs with magnitudes agreeing within [`ER_MAGNITUDE_TOL`] is a
/// gas-surface (Eley-Rideal) signature; anything else is indeterminate.
pub fn classify_mechanism(
    m: &RCDCMatrix,
    reactants: (&str, &str),
    product: &str,
) -> Result<MechanismCall, MechError> {
    let c1 = m
        .get(reactants.0, product)
        .ok_or_else(|| MechError::UndefinedCorrelation(reactants.0.into(), product.into()))?;
    let c2 = m
        .get(reactants.1, product)
        .ok_or_else(|| MechError::UndefinedCorrelation(reactants.1.into(), product.into()))?;
    let (verdict, notes) = if c1 < 0.0 && c2 < 0.0 {
        (
            Verdict::LangmuirHinshelwood,
            "both reactant correlations negative".to_string(),
        )
    } else if c1 * c2 < 0.0 && (c1.abs() - c2.abs()).abs() <= ER_MAGNITUDE_TOL {
        (
            Verdict::EleyRideal,
            format!("opposite signs, magnitudes agree within {ER_MAGNITUDE_TOL}"),
        )
    } else {
        (
            Verdict::Indeterminate,
            "correlation pattern matches neither signature".to_string(),
        )
    };
    Ok(MechanismCall {
        verdict,
        corr_reactant1: c1,
        corr_reactant2: c2,
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    ErIrreversible,
    LhIrreversible,
    LhReversibleCo,
}

/// Correlation values over a 2-D grid of rate constants.
#[derive(Debug, Clone)]
pub struct CorrelationGrid {
    pub sweep_kind: SweepKind,
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    /// Row-major `[i1][i2]`; `None` marks failed cells.
    pub cells: Vec<Vec<Option<GridCell>>>,
}

/// Correlations at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    /// corr(sqrt(r_O2/C_O2), r_CO2)
    pub o2_to_co2: f64,
    /// corr(r_CO/C_CO, r_CO2)
    pub co_to_co2: f64,
    /// corr(sqrt(r_O2/C_O2), r_CO/C_CO)
    pub o2_to_co: f64,
}

fn check_axis(axis: &[f64]) -> Result<(), MechError> {
    let ok = !axis.is_empty()
        && axis.iter().all(|&v| v > 0.0 || v == 0.0)
        && axis.windows(2).all(|w| w[1] > w[0]);
    if ok {
        Ok(())
    } else {
        Err(MechError::BadAxis)
    }
}

/// Evenly spaced axis `start, start + step, ..` up to and including `end`.
pub fn axis_range(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step).round() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

/// Computes RCD series and the three pair correlations for one simulation.
pub fn co_oxidation_cell(
    config: &ReactorConfig,
    mech: &MechanismSpec,
) -> Result<GridCell, MechError> {
    let sim = simulate_pulse(config, mech)?;
    let o2 = extract_thin_zone_features(&sim, "O2")?;
    let co = extract_thin_zone_features(&sim, "CO")?;
    let co2 = extract_thin_zone_features(&sim, "CO2")?;
    let q_o2 = compute_rcd(&o2, Role::Reactant, Transform::Sqrt, None)?;
    let q_co = compute_rcd(&co, Role::Reactant, Transform::Identity, None)?;
    let r_co2 = compute_rcd(&co2, Role::Product, Transform::Identity, None)?;
    let m = rcdc(&[&q_o2, &q_co, &r_co2])?;
    let want = |a: &str, b: &str| {
        m.get(a, b)
            .ok_or_else(|| MechError::UndefinedCorrelation(a.into(), b.into()))
    };
    Ok(GridCell {
        o2_to_co2: want("O2", "CO2")?,
        co_to_co2: want("CO", "CO2")?,
        o2_to_co: want("O2", "CO")?,
    })
}

/// Sweeps irreversible CO-oxidation kinetics over a grid of forward rate
/// constants for oxygen (axis 1) and carbon monoxide (axis 2). Cells run in
/// parallel; failed cells are recorded as `None` and the sweep continues.
pub fn grid_sweep_irreversible(
    kind: SweepKind,
    k_o_axis: &[f64],
    k_co_axis: &[f64],
    config: &ReactorConfig,
) -> Result<CorrelationGrid, MechError> {
    check_axis(k_o_axis)?;
    check_axis(k_co_axis)?;
    let mechs: Vec<(usize, usize, MechanismSpec)> = k_o_axis
        .iter()
        .enumerate()
        .flat_map(|(i, &ko)| {
            k_co_axis.iter().enumerate().map(move |(j, &kc)| {
                let mech = match kind {
                    SweepKind::ErIrreversible => presets::eley_rideal(ko, kc),
                    SweepKind::LhIrreversible => presets::langmuir_hinshelwood(ko, kc, 5.0, 0.0),
                    SweepKind::LhReversibleCo => unreachable!("use grid_sweep_reversible"),
                };
                (i, j, mech)
            })
        })
        .collect();
    let results: Vec<(usize, usize, Option<GridCell>)> = mechs
        .par_iter()
        .map(|(i, j, mech)| (*i, *j, co_oxidation_cell(config, mech).ok()))
        .collect();
    let mut cells = vec![vec![None; k_co_axis.len()]; k_o_axis.len()];
    for (i, j, cell) in results {
        cells[i][j] = cell;
    }
    Ok(CorrelationGrid {
        sweep_kind: kind,
        axis1: k_o_axis.to_vec(),
        axis2: k_co_axis.to_vec(),
        cells,
    })
}

/// Sweeps the reversible Langmuir-Hinshelwood kinetics over forward (axis 1)
/// and reverse (axis 2) CO rate constants, with the oxygen constant fixed at
/// 0.2 and the CO2 combination constant at 5.0.
pub fn grid_sweep_reversible(
    k_co_fwd_axis: &[f64],
    k_co_rev_axis: &[f64],
    config: &ReactorConfig,
) -> Result<CorrelationGrid, MechError> {
    check_axis(k_co_fwd_axis)?;
    if k_co_rev_axis.is_empty() || k_co_rev_axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(MechError::BadAxis);
    }
    let mechs: Vec<(usize, usize, MechanismSpec)> = k_co_fwd_axis
        .iter()
        .enumerate()
        .flat_map(|(i, &kf)| {
            k_co_rev_axis
                .iter()
                .enumerate()
                .map(move |(j, &kr)| (i, j, presets::langmuir_hinshelwood(0.2, kf, 5.0, kr)))
        })
        .collect();
    let results: Vec<(usize, usize, Option<GridCell>)> = mechs
        .par_iter()
        .map(|(i, j, mech)| (*i, *j, co_oxidation_cell(config, mech).ok()))
        .collect();
    let mut cells = vec![vec![None; k_co_rev_axis.len()]; k_co_fwd_axis.len()];
    for (i, j, cell) in results {
        cells[i][j] = cell;
    }
    Ok(CorrelationGrid {
        sweep_kind: SweepKind::LhReversibleCo,
        axis1: k_co_fwd_axis.to_vec(),
        axis2: k_co_rev_axis.to_vec(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{RCDSeries, Role, Transform};

    fn series(id: &str, values: Vec<f64>) -> RCDSeries {
        let n = values.len();
        RCDSeries {
            gas_id: id.into(),
            role: Role::Reactant,
            transform: Transform::Identity,
            values,
            mask: vec![true; n],
            masked_out: 0,
            clipped: 0,
        }
    }

    #[test]
    fn self_correlation_is_one() {
        let v: Vec<f64> = (0..100).map(|k| (k as f64 * 0.1).sin()).collect();
        let a = series("a", v.clone());
        let m = rcdc(&[&a, &a]).unwrap();
        assert!((m.get("a", "a").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negated_series_correlates_minus_one() {
        let v: Vec<f64> = (0..100).map(|k| (k as f64 * 0.07).cos()).collect();
        let a = series("a", v.clone());
        let b = series("b", v.iter().map(|x| -x).collect());
        let m = rcdc(&[&a, &b]).unwrap();
        assert!((m.get("a", "b").unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_reported_undefined() {
        let a = series("a", (0..80).map(|k| k as f64).collect());
        let b = series("b", vec![3.0; 80]);
        let m = rcdc(&[&a, &b]).unwrap();
        assert!(m.get("a", "b").is_none());
        assert!(m.get("a", "a").is_some());
    }

    #[test]
    fn masked_intersection_too_small_is_rejected() {
        let mut a = series("a", (0..60).map(|k| k as f64).collect());
        for k in 0..30 {
            a.mask[k] = false;
        }
        let b = series("b", (0..60).map(|k| (k as f64).sqrt()).collect());
        assert!(matches!(
            rcdc(&[&a, &b]),
            Err(MechError::TooFewAligned { .. })
        ));
    }

    #[test]
    fn pearson_scale_invariance() {
        let va: Vec<f64> = (0..90).map(|k| (k as f64 * 0.2).sin()).collect();
        let vb: Vec<f64> = (0..90).map(|k| (k as f64 * 0.11).cos() + 0.3).collect();
        let base = rcdc(&[&series("a", va.clone()), &series("b", vb.clone())]).unwrap();
        let scaled = rcdc(&[
            &series("a", va.iter().map(|x| 17.5 * x).collect()),
            &series("b", vb),
        ])
        .unwrap();
        let d = (base.get("a", "b").unwrap() - scaled.get("a", "b").unwrap()).abs();
        assert!(d < 1e-12);
    }

    #[test]
    fn classify_sign_rules() {
        let mk = |c1: f64, c2: f64| RCDCMatrix {
            labels: vec!["O2".into(), "CO".into(), "CO2".into()],
            corr: vec![
                vec![Some(1.0), Some(0.0), Some(c1)],
                vec![Some(0.0), Some(1.0), Some(c2)],
                vec![Some(c1), Some(c2), Some(1.0)],
            ],
            n_points: 100,
        };
        let call = classify_mechanism(&mk(-0.5, -0.5), ("O2", "CO"), "CO2").unwrap();
        assert_eq!(call.verdict, Verdict::LangmuirHinshelwood);
        let call = classify_mechanism(&mk(-0.7, 0.7), ("O2", "CO"), "CO2").unwrap();
        assert_eq!(call.verdict, Verdict::EleyRideal);
        let call = classify_mechanism(&mk(-0.9, 0.2), ("O2", "CO"), "CO2").unwrap();
        assert_eq!(call.verdict, Verdict::Indeterminate);
        let call = classify_mechanism(&mk(0.4, 0.4), ("O2", "CO"), "CO2").unwrap();
        assert_eq!(call.verdict, Verdict::Indeterminate);
    }

    #[test]
    fn robust_trim_zero_equals_pearson() {
        let a: Vec<f64> = (0..200).map(|k| (k as f64 * 0.05).sin()).collect();
        let b: Vec<f64> = (0..200).map(|k| (k as f64 * 0.05).cos()).collect();
        let plain = pearson(&a, &b).unwrap();
        let robust = robust_correlation(&a, &b, 0.0).unwrap();
        assert_eq!(plain, robust);
    }

    #[test]
    fn robust_clean_linear_is_one() {
        let a: Vec<f64> = (0..300).map(|k| k as f64 * 0.01).collect();
        let b: Vec<f64> = a.iter().map(|x| 2.0 * x).collect();
        let r = robust_correlation(&a, &b, 0.05).unwrap();
        assert!((r - 1.0).abs() < 1e-6);
    }

    #[test]
    fn robust_beats_plain_on_outliers() {
        // deterministic outlier pattern: 2% of points blown up 100x
        let n = 500;
        let a: Vec<f64> = (0..n).map(|k| k as f64 * 0.01).collect();
        let mut b: Vec<f64> = a.iter().map(|x| 2.0 * x).collect();
        for k in (0..n).step_by(50) {
            b[k] *= 100.0;
        }
        let plain = pearson(&a, &b).unwrap();
        let robust = robust_correlation(&a, &b, 0.05).unwrap();
        assert!(
            (1.0 - robust).abs() < (1.0 - plain).abs(),
            "robust {robust} should beat plain {plain}"
        );
    }

    #[test]
    fn robust_error_paths() {
        let a: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let b = a.clone();
        assert!(matches!(
            robust_correlation(&a, &b, 0.3),
            Err(MechError::BadTrim(_))
        ));
        assert!(matches!(
            robust_correlation(&a[..10], &b[..10], 0.05),
            Err(MechError::TooFewAligned { .. })
        ));
        // constant after winsorizing: undefined, reported distinctly
        let flat = vec![1.0; 100];
        assert!(matches!(
            robust_correlation(&a, &flat, 0.05),
            Err(MechError::ZeroVariance(_))
        ));
    }

    #[test]
    fn axis_range_is_inclusive() {
        let ax = axis_range(0.04, 1.0, 0.02);
        assert_eq!(ax.len(), 49);
        assert!((ax[0] - 0.04).abs() < 1e-12);
        assert!((ax[48] - 1.0).abs() < 1e-12);
    }
}
