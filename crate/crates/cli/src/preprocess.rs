//! Flux preprocessing: baseline subtraction and calibration scaling,
//! `F_hat = mu * (F - mean(F over the baseline window))` per gas.

use thiserror::Error;

use crate::io::{CalibrationSpec, FluxTable};

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("gas '{0}' has no calibration entry")]
    MissingCalibration(String),
    #[error("gas '{gas}': calibration coefficient must be > 0, got {mu}")]
    BadMu { gas: String, mu: f64 },
    #[error("gas '{gas}': baseline window [{start}, {end}] selects no samples in [{t0}, {t1}]")]
    EmptyWindow {
        gas: String,
        start: f64,
        end: f64,
        t0: f64,
        t1: f64,
    },
}

/// Corrections applied to one gas, echoed into output metadata.
#[derive(Debug, Clone)]
pub struct AppliedCorrection {
    pub gas: String,
    pub mu: f64,
    pub baseline_mean: f64,
    pub baseline_samples: usize,
    /// Set when the window mean exceeds 10% of the column peak, which
    /// usually means the window overlaps the pulse.
    pub window_overlaps_peak: bool,
}

/// Fraction of the record used when a calibration entry gives a degenerate
/// window (start == end == 0): the leading pre-pulse samples.
pub const DEFAULT_BASELINE_FRACTION: f64 = 0.05;

/// Applies baseline correction and calibration scaling per gas.
pub fn preprocess_flux(
    table: &FluxTable,
    calibration: &[CalibrationSpec],
) -> Result<(FluxTable, Vec<AppliedCorrection>), PreprocessError> {
    let t0 = *table.times.first().unwrap_or(&0.0);
    let t1 = *table.times.last().unwrap_or(&0.0);
    let mut out = table.clone();
    let mut applied = Vec::with_capacity(table.gases.len());
    for (g, gas) in table.gases.iter().enumerate() {
        let spec = calibration
            .iter()
            .find(|c| &c.gas == gas)
            .ok_or_else(|| PreprocessError::MissingCalibration(gas.clone()))?;
        if !(spec.mu > 0.0) {
            return Err(PreprocessError::BadMu {
                gas: gas.clone(),
                mu: spec.mu,
            });
        }
        let (start, end) = if spec.baseline_start == 0.0 && spec.baseline_end == 0.0 {
            (t0, t0 + DEFAULT_BASELINE_FRACTION * (t1 - t0))
        } else {
            (spec.baseline_start, spec.baseline_end)
        };
        let window: Vec<f64> = table
            .times
            .iter()
            .zip(&table.flux[g])
            .filter(|(&t, _)| t >= start && t <= end)
            .map(|(_, &f)| f)
            .collect();
        if window.is_empty() {
            return Err(PreprocessError::EmptyWindow {
                gas: gas.clone(),
                start,
                end,
                t0,
                t1,
            });
        }
        let baseline = window.iter().sum::<f64>() / window.len() as f64;
        let peak = table.flux[g].iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
        for v in out.flux[g].iter_mut() {
            *v = spec.mu * (*v - baseline);
        }
        applied.push(AppliedCorrection {
            gas: gas.clone(),
            mu: spec.mu,
            baseline_mean: baseline,
            baseline_samples: window.len(),
            window_overlaps_peak: baseline.abs() > 0.1 * peak && peak > 0.0,
        });
    }
    Ok((out, applied))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(values: Vec<f64>) -> FluxTable {
        let n = values.len();
        FluxTable {
            times: (0..n).map(|k| k as f64 * 0.01).collect(),
            gases: vec!["A".into()],
            flux: vec![values],
        }
    }

    fn cal(mu: f64, start: f64, end: f64) -> Vec<CalibrationSpec> {
        vec![CalibrationSpec {
            gas: "A".into(),
            mu,
            baseline_start: start,
            baseline_end: end,
        }]
    }

    #[test]
    fn identity_when_mu_one_and_zero_baseline() {
        let mut vals = vec![0.0; 20];
        vals[10] = 5.0;
        let t = table(vals.clone());
        let (out, applied) = preprocess_flux(&t, &cal(1.0, 0.0, 0.05)).unwrap();
        assert_eq!(out.flux[0], vals);
        assert_eq!(applied[0].baseline_mean, 0.0);
        assert!(!applied[0].window_overlaps_peak);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let t = table(vec![3.5; 30]);
        let (out, applied) = preprocess_flux(&t, &cal(2.0, 0.0, 0.29)).unwrap();
        assert!(out.flux[0].iter().all(|&v| v.abs() < 1e-12));
        // the whole column is "baseline", which certainly overlaps the peak
        assert!(applied[0].window_overlaps_peak);
    }

    #[test]
    fn recovers_true_flux_from_scaled_offset_signal() {
        // raw = true/mu + b  =>  mu * (raw - b) = true
        let truth: Vec<f64> = (0..50)
            .map(|k| {
                if k > 10 {
                    ((k - 10) as f64 * 0.3).sin().abs()
                } else {
                    0.0
                }
            })
            .collect();
        let mu = 3.7;
        let b = 0.42;
        let raw: Vec<f64> = truth.iter().map(|v| v / mu + b).collect();
        let t = table(raw);
        let (out, _) = preprocess_flux(&t, &cal(mu, 0.0, 0.1)).unwrap();
        for (a, want) in out.flux[0].iter().zip(&truth) {
            assert!((a - want).abs() < 1e-10, "{a} vs {want}");
        }
    }

    #[test]
    fn rejects_nonpositive_mu_and_empty_window() {
        let t = table(vec![1.0; 10]);
        assert!(matches!(
            preprocess_flux(&t, &cal(0.0, 0.0, 0.05)),
            Err(PreprocessError::BadMu { .. })
        ));
        assert!(matches!(
            preprocess_flux(&t, &cal(1.0, 5.0, 6.0)),
            Err(PreprocessError::EmptyWindow { .. })
        ));
    }
}
