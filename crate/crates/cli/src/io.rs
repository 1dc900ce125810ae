//! CSV schemas and deterministic serialization.
//!
//! Every emitted file starts with `#`-prefixed comment lines echoing the
//! effective configuration (self-describing runs); loaders skip them.
//! Numbers are written with 12 significant digits so save/load round-trips
//! preserve values at working precision.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use tapkin::features::{RawFeatureTable, RawGasColumns, TransientFeatures};
use tapkin::mechanism::{CorrelationGrid, RCDCMatrix};
use tapkin::reactor::SimulationResult;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{row}: {detail}")]
    Schema {
        path: String,
        /// 1-based line number in the file
        row: usize,
        detail: String,
    },
    #[error("{path}: {detail}")]
    Format { path: String, detail: String },
}

/// Formats a float with 12 significant digits.
pub fn fmt_g12(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    format!("{v:.11e}")
}

fn parse_float(path: &str, row: usize, column: &str, text: &str) -> Result<f64, IoError> {
    let t = text.trim();
    match t {
        "nan" | "NaN" | "NAN" => return Ok(f64::NAN),
        "inf" => return Ok(f64::INFINITY),
        "-inf" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    t.parse::<f64>().map_err(|_| IoError::Schema {
        path: path.to_string(),
        row,
        detail: format!("column '{column}': cannot parse '{t}' as a number"),
    })
}

/// Raw flux table: shared time grid plus one instrument-unit column per gas.
#[derive(Debug, Clone)]
pub struct FluxTable {
    pub times: Vec<f64>,
    pub gases: Vec<String>,
    /// column-major per gas
    pub flux: Vec<Vec<f64>>,
}

impl FluxTable {
    pub fn gas_index(&self, gas: &str) -> Option<usize> {
        self.gases.iter().position(|g| g == gas)
    }
}

/// Per-gas calibration: scale factor and baseline window.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSpec {
    pub gas: String,
    /// mol/s per instrument unit
    pub mu: f64,
    pub baseline_start: f64,
    pub baseline_end: f64,
}

struct ParsedCsv {
    header: Vec<String>,
    rows: Vec<(usize, Vec<f64>)>,
}

fn read_numeric_csv(path: &Path) -> Result<ParsedCsv, IoError> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| IoError::Read {
        path: name.clone(),
        source,
    })?;
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if header.is_none() {
            header = Some(line.split(',').map(|s| s.trim().to_string()).collect());
            continue;
        }
        let head = header.as_ref().unwrap();
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != head.len() {
            return Err(IoError::Schema {
                path: name,
                row,
                detail: format!("expected {} columns, found {}", head.len(), cells.len()),
            });
        }
        let mut values = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            values.push(parse_float(&name, row, &head[c], cell)?);
        }
        rows.push((row, values));
    }
    let header = header.ok_or_else(|| IoError::Format {
        path: name.clone(),
        detail: "file has no header row".into(),
    })?;
    if rows.is_empty() {
        return Err(IoError::Format {
            path: name,
            detail: "file has a header but no data rows".into(),
        });
    }
    Ok(ParsedCsv { header, rows })
}

fn check_monotone_time(path: &Path, rows: &[(usize, Vec<f64>)]) -> Result<(), IoError> {
    for pair in rows.windows(2) {
        if pair[1].1[0] <= pair[0].1[0] {
            return Err(IoError::Schema {
                path: path.display().to_string(),
                row: pair[1].0,
                detail: format!(
                    "time must increase monotonically; {} follows {}",
                    pair[1].1[0], pair[0].1[0]
                ),
            });
        }
    }
    Ok(())
}

/// Loads `time_s,<gas1>,<gas2>,...`.
pub fn load_flux_csv(path: &Path) -> Result<FluxTable, IoError> {
    let parsed = read_numeric_csv(path)?;
    if parsed.header[0] != "time_s" {
        return Err(IoError::Schema {
            path: path.display().to_string(),
            row: 1,
            detail: format!(
                "first column must be 'time_s', found '{}'",
                parsed.header[0]
            ),
        });
    }
    if parsed.header.len() < 2 {
        return Err(IoError::Format {
            path: path.display().to_string(),
            detail: "no gas columns".into(),
        });
    }
    let gases: Vec<String> = parsed.header[1..].to_vec();
    let mut unique = gases.clone();
    unique.sort();
    unique.dedup();
    if unique.len() != gases.len() {
        return Err(IoError::Format {
            path: path.display().to_string(),
            detail: "duplicate gas labels in header".into(),
        });
    }
    check_monotone_time(path, &parsed.rows)?;
    let times: Vec<f64> = parsed.rows.iter().map(|(_, v)| v[0]).collect();
    let flux: Vec<Vec<f64>> = (0..gases.len())
        .map(|g| parsed.rows.iter().map(|(_, v)| v[g + 1]).collect())
        .collect();
    Ok(FluxTable { times, gases, flux })
}

/// Writes a flux table with optional `#` comment lines first.
pub fn write_flux_csv(path: &Path, table: &FluxTable, comments: &[String]) -> Result<(), IoError> {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let _ = writeln!(out, "time_s,{}", table.gases.join(","));
    for (k, &t) in table.times.iter().enumerate() {
        let mut line = fmt_g12(t);
        for g in 0..table.gases.len() {
            line.push(',');
            line.push_str(&fmt_g12(table.flux[g][k]));
        }
        let _ = writeln!(out, "{line}");
    }
    fs::write(path, out).map_err(|source| IoError::Write {
        path: path.display().to_string(),
        source,
    })
}

/// Loads sidecar calibration lines `<gas>,mu=<float>,baseline_start=<float>,baseline_end=<float>`.
pub fn load_calibration(path: &Path) -> Result<Vec<CalibrationSpec>, IoError> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| IoError::Read {
        path: name.clone(),
        source,
    })?;
    let mut specs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(IoError::Schema {
                path: name,
                row,
                detail: "expected '<gas>,mu=<v>,baseline_start=<v>,baseline_end=<v>'".into(),
            });
        }
        let field = |idx: usize, key: &str| -> Result<f64, IoError> {
            let part = parts[idx];
            let rest = part.strip_prefix(key).and_then(|r| r.strip_prefix('='));
            match rest {
                Some(v) => parse_float(&name, row, key, v),
                None => Err(IoError::Schema {
                    path: name.clone(),
                    row,
                    detail: format!("expected '{key}=<value>', found '{part}'"),
                }),
            }
        };
        specs.push(CalibrationSpec {
            gas: parts[0].to_string(),
            mu: field(1, "mu")?,
            baseline_start: field(2, "baseline_start")?,
            baseline_end: field(3, "baseline_end")?,
        });
    }
    if specs.is_empty() {
        return Err(IoError::Format {
            path: name,
            detail: "no calibration entries".into(),
        });
    }
    Ok(specs)
}

/// Loads `time_s,r_<gas>,C_<gas>,U_<gas>` repeated per gas, handing the
/// parsed columns to the feature validator.
pub fn load_features_csv(path: &Path) -> Result<Vec<TransientFeatures>, IoError> {
    let parsed = read_numeric_csv(path)?;
    let name = path.display().to_string();
    if parsed.header[0] != "time_s" {
        return Err(IoError::Schema {
            path: name,
            row: 1,
            detail: format!(
                "first column must be 'time_s', found '{}'",
                parsed.header[0]
            ),
        });
    }
    // group r_/C_/U_ columns by gas suffix, preserving first-seen order
    let mut order: Vec<String> = Vec::new();
    let mut triplets: std::collections::BTreeMap<String, [Option<usize>; 3]> =
        std::collections::BTreeMap::new();
    for (idx, col) in parsed.header.iter().enumerate().skip(1) {
        let (slot, gas) = if let Some(g) = col.strip_prefix("r_") {
            (0, g)
        } else if let Some(g) = col.strip_prefix("C_") {
            (1, g)
        } else if let Some(g) = col.strip_prefix("U_") {
            (2, g)
        } else {
            return Err(IoError::Schema {
                path: name,
                row: 1,
                detail: format!("column '{col}' is not one of r_<gas>, C_<gas>, U_<gas>"),
            });
        };
        if !triplets.contains_key(gas) {
            order.push(gas.to_string());
        }
        let entry = triplets.entry(gas.to_string()).or_insert([None; 3]);
        if entry[slot].is_some() {
            return Err(IoError::Schema {
                path: name,
                row: 1,
                detail: format!("duplicate column '{col}'"),
            });
        }
        entry[slot] = Some(idx);
    }
    check_monotone_time(path, &parsed.rows)?;
    let times: Vec<f64> = parsed.rows.iter().map(|(_, v)| v[0]).collect();
    let mut gases = Vec::new();
    for gas in order {
        let slots = triplets[&gas];
        let tags = ["r", "C", "U"];
        for (s, slot) in slots.iter().enumerate() {
            if slot.is_none() {
                return Err(IoError::Schema {
                    path: name,
                    row: 1,
                    detail: format!("gas '{gas}' is missing column '{}_{gas}'", tags[s]),
                });
            }
        }
        let col = |idx: usize| -> Vec<f64> { parsed.rows.iter().map(|(_, v)| v[idx]).collect() };
        gases.push(RawGasColumns {
            gas_id: gas,
            rate: col(slots[0].unwrap()),
            concentration: col(slots[1].unwrap()),
            uptake: col(slots[2].unwrap()),
        });
    }
    tapkin::features::ingest_features(RawFeatureTable { times, gases }).map_err(|e| {
        IoError::Format {
            path: path.display().to_string(),
            detail: e.to_string(),
        }
    })
}

/// Writes per-gas features from a simulation.
pub fn write_features_csv(
    path: &Path,
    sim: &SimulationResult,
    comments: &[String],
) -> Result<(), IoError> {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let mut header = "time_s".to_string();
    for gas in &sim.gases {
        let _ = write!(header, ",r_{gas},C_{gas},U_{gas}");
    }
    let _ = writeln!(out, "{header}");
    for k in 0..sim.grid.len() {
        let mut line = fmt_g12(sim.grid.time(k));
        for g in 0..sim.gases.len() {
            let _ = write!(
                line,
                ",{},{},{}",
                fmt_g12(sim.rate[g][k]),
                fmt_g12(sim.thin_conc[g][k]),
                fmt_g12(sim.uptake[g][k])
            );
        }
        let _ = writeln!(out, "{line}");
    }
    fs::write(path, out).map_err(|source| IoError::Write {
        path: path.display().to_string(),
        source,
    })
}

/// Writes validated features (the canonicalization path).
pub fn write_features_csv_from(
    path: &Path,
    features: &[TransientFeatures],
    comments: &[String],
) -> Result<(), IoError> {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let mut header = "time_s".to_string();
    for f in features {
        let _ = write!(header, ",r_{0},C_{0},U_{0}", f.gas_id);
    }
    let _ = writeln!(out, "{header}");
    let n = features.first().map_or(0, |f| f.grid.len());
    for k in 0..n {
        let mut line = fmt_g12(features[0].grid.time(k));
        for f in features {
            let _ = write!(
                line,
                ",{},{},{}",
                fmt_g12(f.rate[k]),
                fmt_g12(f.concentration[k]),
                fmt_g12(f.uptake[k])
            );
        }
        let _ = writeln!(out, "{line}");
    }
    fs::write(path, out).map_err(|source| IoError::Write {
        path: path.display().to_string(),
        source,
    })
}

/// Writes a correlation grid: `k_axis1,k_axis2,corr_O2_CO2,corr_CO_CO2,corr_O2_CO`
/// with one row per cell and `nan` for failed cells.
pub fn write_grid_csv(
    path: &Path,
    grid: &CorrelationGrid,
    comments: &[String],
) -> Result<(), IoError> {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let _ = writeln!(out, "k_axis1,k_axis2,corr_O2_CO2,corr_CO_CO2,corr_O2_CO");
    for (i, &a1) in grid.axis1.iter().enumerate() {
        for (j, &a2) in grid.axis2.iter().enumerate() {
            let (c1, c2, c3) = match grid.cells[i][j] {
                Some(cell) => (
                    fmt_g12(cell.o2_to_co2),
                    fmt_g12(cell.co_to_co2),
                    fmt_g12(cell.o2_to_co),
                ),
                None => ("nan".into(), "nan".into(), "nan".into()),
            };
            let _ = writeln!(out, "{},{},{c1},{c2},{c3}", fmt_g12(a1), fmt_g12(a2));
        }
    }
    fs::write(path, out).map_err(|source| IoError::Write {
        path: path.display().to_string(),
        source,
    })
}

/// Loads a grid CSV back (used for golden-file comparison).
pub fn load_grid_csv(path: &Path) -> Result<Vec<(f64, f64, f64, f64, f64)>, IoError> {
    let parsed = read_numeric_csv(path)?;
    if parsed.header.len() != 5 {
        return Err(IoError::Format {
            path: path.display().to_string(),
            detail: format!("expected 5 grid columns, found {}", parsed.header.len()),
        });
    }
    Ok(parsed
        .rows
        .iter()
        .map(|(_, v)| (v[0], v[1], v[2], v[3], v[4]))
        .collect())
}

/// Writes an RCDC matrix as a labelled square table.
pub fn write_rcdc_csv(path: &Path, m: &RCDCMatrix, comments: &[String]) -> Result<(), IoError> {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let _ = writeln!(out, "series,{}", m.labels.join(","));
    for (i, label) in m.labels.iter().enumerate() {
        let mut line = label.clone();
        for j in 0..m.labels.len() {
            line.push(',');
            match m.corr[i][j] {
                Some(v) => line.push_str(&fmt_g12(v)),
                None => line.push_str("nan"),
            }
        }
        let _ = writeln!(out, "{line}");
    }
    fs::write(path, out).map_err(|source| IoError::Write {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("tapkin-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn flux_round_trip_preserves_values() {
        let path = tmp("flux_rt.csv");
        let table = FluxTable {
            times: vec![0.0, 0.001, 0.002],
            gases: vec!["O2".into(), "CO".into()],
            flux: vec![
                vec![0.0, 1.234567890123, 2.5e-7],
                vec![0.0, 9.87e-3, 0.3333333333333],
            ],
        };
        write_flux_csv(&path, &table, &["demo".into()]).unwrap();
        let back = load_flux_csv(&path).unwrap();
        assert_eq!(back.gases, table.gases);
        for g in 0..2 {
            for k in 0..3 {
                let (a, b) = (table.flux[g][k], back.flux[g][k]);
                assert!((a - b).abs() <= 1e-11 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn grid_csv_round_trip_with_invalid_cell() {
        use tapkin::mechanism::{CorrelationGrid, GridCell, SweepKind};
        let path = tmp("grid_nan.csv");
        let grid = CorrelationGrid {
            sweep_kind: SweepKind::LhIrreversible,
            axis1: vec![0.1, 0.2],
            axis2: vec![0.3],
            cells: vec![
                vec![Some(GridCell {
                    o2_to_co2: -0.5,
                    co_to_co2: -0.25,
                    o2_to_co: 0.75,
                })],
                vec![None],
            ],
        };
        write_grid_csv(&path, &grid, &[]).unwrap();
        let rows = load_grid_csv(&path).unwrap();
        assert_eq!(rows.len(), 2);
        assert!((rows[0].2 + 0.5).abs() < 1e-12);
        assert!(rows[1].2.is_nan() && rows[1].3.is_nan() && rows[1].4.is_nan());
    }

    #[test]
    fn flux_rejects_nonmonotone_time() {
        let path = tmp("flux_bad_time.csv");
        fs::write(&path, "time_s,A\n0.0,1\n0.2,2\n0.1,3\n").unwrap();
        let err = load_flux_csv(&path).unwrap_err();
        assert!(err.to_string().contains("monotonically"));
        assert!(err.to_string().contains(":4:"), "{err}");
    }

    #[test]
    fn flux_reports_row_and_column_of_bad_cell() {
        let path = tmp("flux_bad_cell.csv");
        fs::write(&path, "time_s,A\n0.0,1\n0.1,oops\n").unwrap();
        let err = load_flux_csv(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":3:") && msg.contains("'A'"), "{msg}");
    }

    #[test]
    fn calibration_parses_and_rejects() {
        let path = tmp("cal.csv");
        fs::write(&path, "O2,mu=2.5,baseline_start=0.0,baseline_end=0.1\n").unwrap();
        let specs = load_calibration(&path).unwrap();
        assert_eq!(
            specs[0],
            CalibrationSpec {
                gas: "O2".into(),
                mu: 2.5,
                baseline_start: 0.0,
                baseline_end: 0.1
            }
        );
        fs::write(&path, "O2,mu=2.5,start=0.0,baseline_end=0.1\n").unwrap();
        assert!(load_calibration(&path).is_err());
    }

    #[test]
    fn features_schema_errors_are_specific() {
        let path = tmp("features_bad.csv");
        fs::write(&path, "time_s,r_A,C_A\n0.0,1,2\n0.001,1,2\n").unwrap();
        let err = load_features_csv(&path).unwrap_err();
        assert!(err.to_string().contains("U_A"), "{err}");

        fs::write(&path, "time_s,r_A,C_A,U_A,flux_A\n0.0,1,2,3,4\n").unwrap();
        let err = load_features_csv(&path).unwrap_err();
        assert!(err.to_string().contains("flux_A"), "{err}");
    }

    #[test]
    fn comment_lines_are_skipped() {
        let path = tmp("flux_comments.csv");
        fs::write(
            &path,
            "# config echo\n# seed = 7\ntime_s,A\n0.0,0\n0.001,1\n0.002,2\n",
        )
        .unwrap();
        let table = load_flux_csv(&path).unwrap();
        assert_eq!(table.times.len(), 3);
    }
}
