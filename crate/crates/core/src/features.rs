//! Transient kinetic features and rate-concentration dependency series.

use thiserror::Error;

use crate::grid::{cumulative_trapezoid, UniformGrid};
use crate::reactor::{SimError, SimulationResult};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("rate series '{name}' has {len} points, expected {expected}")]
    GridMismatch {
        name: String,
        len: usize,
        expected: usize,
    },
    #[error("no stoichiometric terms supplied")]
    EmptyStoichiometry,
    #[error("every point of '{gas}' fell below the concentration floor {floor:.3e}")]
    AllMasked { gas: String, floor: f64 },
    #[error("{0}")]
    Sim(#[from] SimError),
    #[error("column '{column}': {detail}")]
    Column { column: String, detail: String },
    #[error("non-uniform time grid: {0}")]
    NonUniformGrid(String),
}

/// Per-gas transient features on a shared uniform grid.
#[derive(Debug, Clone)]
pub struct TransientFeatures {
    pub gas_id: String,
    pub grid: UniformGrid,
    /// Reaction rate, mol/s, in the mechanism's written convention.
    pub rate: Vec<f64>,
    /// Thin-zone gas concentration, mol/m.
    pub concentration: Vec<f64>,
    /// Surface uptake associated with this gas, mol/m.
    pub uptake: Vec<f64>,
    /// Signed stoichiometric coefficients over gas rate series whose
    /// integral reproduces `uptake`.
    pub stoichiometry: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Reactant,
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Identity,
    /// Square root of the quotient, for second-order surface interactions.
    /// Negative inputs are clipped to zero and counted.
    Sqrt,
}

/// Rate-concentration dependency series: `r/C` for reactants (optionally
/// square-rooted), the rate itself for products.
#[derive(Debug, Clone)]
pub struct RCDSeries {
    pub gas_id: String,
    pub role: Role,
    pub transform: Transform,
    pub values: Vec<f64>,
    /// Points retained after the concentration floor.
    pub mask: Vec<bool>,
    pub masked_out: usize,
    pub clipped: usize,
}

impl RCDSeries {
    pub fn retained(&self) -> usize {
        self.values.len() - self.masked_out
    }
}

/// Relative concentration floor below which reactant quotients are masked.
pub const C_FLOOR_REL: f64 = 1e-6;

/// Cumulative trapezoid integral of the signed stoichiometric rate sum:
/// `U(t_k) = integral over [0, t_k] of sum_i nu_i r_i`.
pub fn compute_uptake(
    rates: &[(&str, &[f64])],
    stoich: &[(String, f64)],
    grid: &UniformGrid,
) -> Result<Vec<f64>, FeatureError> {
    if stoich.is_empty() {
        return Err(FeatureError::EmptyStoichiometry);
    }
    let n = grid.len();
    let mut integrand = vec![0.0; n];
    for (name, nu) in stoich {
        let series = rates
            .iter()
            .find(|(g, _)| g == name)
            .map(|(_, s)| *s)
            .ok_or_else(|| FeatureError::Column {
                column: name.clone(),
                detail: "rate series not supplied".into(),
            })?;
        if series.len() != n {
            return Err(FeatureError::GridMismatch {
                name: name.clone(),
                len: series.len(),
                expected: n,
            });
        }
        for (acc, v) in integrand.iter_mut().zip(series) {
            *acc += nu * v;
        }
    }
    Ok(cumulative_trapezoid(&integrand, grid.dt()))
}

/// Builds the rate-concentration dependency series for one gas.
///
/// Reactants use the quotient `r/C`, masked wherever `|C|` falls below
/// `c_floor` (default `C_FLOOR_REL * max|C|` when `c_floor` is `None`).
/// Products use the rate series unchanged. The `Sqrt` transform clips
/// negative inputs at zero and records how many points were clipped.
pub fn compute_rcd(
    features: &TransientFeatures,
    role: Role,
    transform: Transform,
    c_floor: Option<f64>,
) -> Result<RCDSeries, FeatureError> {
    let n = features.grid.len();
    let mut values = vec![0.0; n];
    let mut mask = vec![true; n];
    let mut masked_out = 0usize;
    let mut clipped = 0usize;
    match role {
        Role::Product => {
            values.copy_from_slice(&features.rate);
        }
        Role::Reactant => {
            let c_max = features
                .concentration
                .iter()
                .fold(0.0_f64, |m, &c| m.max(c.abs()));
            let floor = c_floor.unwrap_or(C_FLOOR_REL * c_max);
            for k in 0..n {
                let c = features.concentration[k];
                // exact zeros are unmeasurable regardless of the floor
                if c.abs() < floor || c == 0.0 {
                    mask[k] = false;
                    masked_out += 1;
                } else {
                    values[k] = features.rate[k] / c;
                }
            }
            if masked_out == n {
                return Err(FeatureError::AllMasked {
                    gas: features.gas_id.clone(),
                    floor,
                });
            }
        }
    }
    if transform == Transform::Sqrt {
        for (k, v) in values.iter_mut().enumerate() {
            if !mask[k] {
                continue;
            }
            if *v < 0.0 {
                *v = 0.0;
                clipped += 1;
            } else {
                *v = v.sqrt();
            }
        }
    }
    Ok(RCDSeries {
        gas_id: features.gas_id.clone(),
        role,
        transform,
        values,
        mask,
        masked_out,
        clipped,
    })
}

/// Reads the exact thin-zone features of one gas out of a simulation.
pub fn extract_thin_zone_features(
    sim: &SimulationResult,
    gas_id: &str,
) -> Result<TransientFeatures, FeatureError> {
    let g = sim.gas_index(gas_id)?;
    Ok(TransientFeatures {
        gas_id: gas_id.to_string(),
        grid: sim.grid.clone(),
        rate: sim.rate[g].clone(),
        concentration: sim.thin_conc[g].clone(),
        uptake: sim.uptake[g].clone(),
        stoichiometry: sim.uptake_stoich[g].clone(),
    })
}

/// A parsed per-gas feature table, before validation. Produced by the CSV
/// loader; the time column is shared.
#[derive(Debug, Clone)]
pub struct RawFeatureTable {
    pub times: Vec<f64>,
    /// (gas, rate column, concentration column, uptake column)
    pub gases: Vec<RawGasColumns>,
}

#[derive(Debug, Clone)]
pub struct RawGasColumns {
    pub gas_id: String,
    pub rate: Vec<f64>,
    pub concentration: Vec<f64>,
    pub uptake: Vec<f64>,
}

/// Longest NaN run repaired by interpolation; anything longer is rejected.
pub const MAX_NAN_RUN: usize = 5;

/// Validates a parsed feature table: uniform grid, equal column lengths, and
/// NaN runs no longer than [`MAX_NAN_RUN`] samples (short runs are filled by
/// linear interpolation).
pub fn ingest_features(raw: RawFeatureTable) -> Result<Vec<TransientFeatures>, FeatureError> {
    let grid = UniformGrid::infer(&raw.times, 1e-9).ok_or_else(|| {
        FeatureError::NonUniformGrid(format!(
            "time column of {} samples is not a uniform grid starting at 0",
            raw.times.len()
        ))
    })?;
    let n = grid.len();
    let mut out = Vec::with_capacity(raw.gases.len());
    for gas in raw.gases {
        let mut series = [("r", gas.rate), ("C", gas.concentration), ("U", gas.uptake)];
        for (tag, column) in series.iter_mut() {
            let name = format!("{}_{}", tag, gas.gas_id);
            if column.len() != n {
                return Err(FeatureError::GridMismatch {
                    name,
                    len: column.len(),
                    expected: n,
                });
            }
            repair_nan_runs(column, &name)?;
        }
        let [(_, rate), (_, concentration), (_, uptake)] = series;
        out.push(TransientFeatures {
            gas_id: gas.gas_id,
            grid: grid.clone(),
            rate,
            concentration,
            uptake,
            stoichiometry: Vec::new(),
        });
    }
    Ok(out)
}

fn repair_nan_runs(column: &mut [f64], name: &str) -> Result<(), FeatureError> {
    let n = column.len();
    let mut k = 0;
    while k < n {
        if !column[k].is_nan() {
            k += 1;
            continue;
        }
        let start = k;
        while k < n && column[k].is_nan() {
            k += 1;
        }
        let run = k - start;
        if run > MAX_NAN_RUN {
            return Err(FeatureError::Column {
                column: name.to_string(),
                detail: format!(
                    "NaN run of {run} samples starting at row {start} (limit {MAX_NAN_RUN})"
                ),
            });
        }
        let left = if start > 0 {
            Some(column[start - 1])
        } else {
            None
        };
        let right = if k < n { Some(column[k]) } else { None };
        for (j, cell) in column[start..k].iter_mut().enumerate() {
            *cell = match (left, right) {
                (Some(l), Some(r)) => {
                    let f = (j + 1) as f64 / (run + 1) as f64;
                    l + f * (r - l)
                }
                (Some(l), None) => l,
                (None, Some(r)) => r,
                (None, None) => {
                    return Err(FeatureError::Column {
                        column: name.to_string(),
                        detail: "entire column is NaN".into(),
                    })
                }
            };
        }
    }
    Ok(())
}
