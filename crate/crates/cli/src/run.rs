//! Command-line entry points and pipeline dispatch.
//!
//! Exit codes: 0 on success, 1 on argument/validation errors, 2 on
//! numerical failures (integration or fitting).

use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand};

use tapkin::features::{compute_rcd, RCDSeries, Role, Transform};
use tapkin::mechanism::{
    axis_range, classify_mechanism, grid_sweep_irreversible, grid_sweep_reversible, rcdc, SweepKind,
};
use tapkin::reactor::{presets, simulate_pulse, MechanismSpec, ReactorConfig, SimError};
use tapkin::regress::{
    build_design_matrix, fit_lasso, fit_mechanism_line, fit_ols, fit_scad, Method, PenaltySpec,
    RegressError, TermDescriptor, TermKind,
};

use crate::config::{echo_config, load_config};
use crate::io;
use crate::preprocess::preprocess_flux;
use crate::report::Report;

#[derive(Parser)]
#[command(
    name = "tapkin",
    version,
    about = "Thin-zone pulse-response kinetics: simulation, rate-reactivity fits, correlation analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a pulse response and write per-gas transient features
    Simulate(SimulateArgs),
    /// Validate feature files or preprocess raw flux tables
    Features(FeaturesArgs),
    /// Fit the rate-reactivity model or the mechanism line
    Fit(FitArgs),
    /// Compute the rate-concentration dependency correlation matrix
    Rcdc(RcdcArgs),
    /// Sweep rate-constant grids and record pair correlations
    Grid(GridArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Named preset (see --list-presets)
    #[arg(long)]
    preset: Option<String>,
    /// TOML run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output features CSV
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional outlet-flux CSV
    #[arg(long)]
    flux_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// List available presets and exit
    #[arg(long, default_value_t = false)]
    list_presets: bool,
}

#[derive(Args)]
struct FeaturesArgs {
    /// Features CSV to validate and canonicalize
    #[arg(long)]
    features: Option<PathBuf>,
    /// Raw flux CSV to preprocess (requires --calib)
    #[arg(long)]
    flux: Option<PathBuf>,
    /// Calibration sidecar for --flux
    #[arg(long)]
    calib: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    features: PathBuf,
    /// Gas whose rate is regressed (defaults to the only gas present)
    #[arg(long)]
    gas: Option<String>,
    /// Term set: "full" or "custom:C,U,CU,CU2,U2"
    #[arg(long, default_value = "full")]
    terms: String,
    /// ols | lasso | scad
    #[arg(long, default_value = "scad")]
    method: String,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use seeded random fold assignment instead of contiguous blocks
    #[arg(long, default_value_t = false)]
    random_folds: bool,
    /// Fit the CO-vs-sqrt(O2) quotient line instead of the term model
    #[arg(long, default_value_t = false)]
    mechanism_line: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RcdcArgs {
    #[arg(long)]
    features: PathBuf,
    /// Comma-separated product gases (rate used directly)
    #[arg(long, default_value = "CO2")]
    products: String,
    /// Comma-separated reactants whose quotient is square-rooted
    #[arg(long, default_value = "O2")]
    sqrt: String,
    /// Winsorizing fraction for robust correlation (0 = plain Pearson)
    #[arg(long, default_value_t = 0.0)]
    trim: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GridArgs {
    /// er-irrev | lh-irrev | lh-rev
    #[arg(long)]
    sweep: String,
    /// Axis increment over [0.04, 1.00]
    #[arg(long, default_value_t = 0.02)]
    step: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Failures that indicate bad input rather than numerical trouble.
fn is_validation(err: &anyhow::Error) -> bool {
    if let Some(sim) = err.downcast_ref::<SimError>() {
        return matches!(
            sim,
            SimError::InvalidConfig(_) | SimError::InvalidMechanism(_) | SimError::UnknownGas(_)
        );
    }
    if let Some(reg) = err.downcast_ref::<RegressError>() {
        return !matches!(
            reg,
            RegressError::NonConvergence(_) | RegressError::RankDeficient { .. }
        );
    }
    // io/schema/config/argument problems are all validation
    true
}

pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own usage text; unknown flags land here
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Features(args) => cmd_features(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Rcdc(args) => cmd_rcdc(args),
        Command::Grid(args) => cmd_grid(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            if is_validation(&err) {
                1
            } else {
                2
            }
        }
    }
}

fn resolve_setup(
    preset: Option<&str>,
    config: Option<&PathBuf>,
) -> Result<(ReactorConfig, MechanismSpec)> {
    match (preset, config) {
        (Some(name), None) => presets::by_name(name).ok_or_else(|| {
            anyhow!(
                "unknown preset '{name}'; available: {}",
                presets::PRESET_NAMES.join(", ")
            )
        }),
        (None, Some(path)) => {
            let file = load_config(path)?;
            let mech = file
                .mechanism
                .as_ref()
                .ok_or_else(|| anyhow!("config {} has no [mechanism] section", path.display()))?
                .to_spec()?;
            Ok((file.reactor.to_config(), mech))
        }
        (Some(name), Some(path)) => {
            // preset supplies the mechanism, config overrides the reactor
            let (_, mech) = presets::by_name(name).ok_or_else(|| {
                anyhow!(
                    "unknown preset '{name}'; available: {}",
                    presets::PRESET_NAMES.join(", ")
                )
            })?;
            let file = load_config(path)?;
            Ok((file.reactor.to_config(), mech))
        }
        (None, None) => bail!("either --preset or --config is required"),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    if args.list_presets {
        for name in presets::PRESET_NAMES {
            println!("{name}");
        }
        return Ok(());
    }
    let out = args
        .out
        .as_ref()
        .ok_or_else(|| anyhow!("--out is required"))?;
    let (config, mech) = resolve_setup(args.preset.as_deref(), args.config.as_ref())?;
    let sim = simulate_pulse(&config, &mech)?;
    let mut comments = echo_config(&config, Some(&mech), args.seed);
    comments.push(format!(
        "mass_balance_defect = {:.3e}",
        sim.mass_balance_defect
    ));
    io::write_features_csv(out, &sim, &comments)?;
    if let Some(flux_path) = &args.flux_out {
        let table = io::FluxTable {
            times: sim.grid.times(),
            gases: sim.gases.clone(),
            flux: sim.flux.clone(),
        };
        io::write_flux_csv(flux_path, &table, &comments)?;
    }
    println!(
        "simulated {:?} on {} cells: {} output points, mass balance defect {:.3e}",
        mech.kind,
        config.n_cells,
        sim.grid.len(),
        sim.mass_balance_defect
    );
    Ok(())
}

fn cmd_features(args: FeaturesArgs) -> Result<()> {
    match (&args.features, &args.flux, &args.calib) {
        (Some(features), None, None) => {
            let parsed = io::load_features_csv(features)?;
            let comments = vec![
                format!("tool = tapkin {}", env!("CARGO_PKG_VERSION")),
                format!("validated from {}", features.display()),
                format!("seed = {}", args.seed),
            ];
            io::write_features_csv_from(&args.out, &parsed, &comments)?;
            println!(
                "validated {} gases x {} samples",
                parsed.len(),
                parsed.first().map_or(0, |f| f.grid.len())
            );
            Ok(())
        }
        (None, Some(flux), Some(calib)) => {
            let table = io::load_flux_csv(flux)?;
            let specs = io::load_calibration(calib)?;
            let (corrected, applied) = preprocess_flux(&table, &specs)?;
            let mut comments = vec![
                format!("tool = tapkin {}", env!("CARGO_PKG_VERSION")),
                format!("preprocessed from {}", flux.display()),
                format!("seed = {}", args.seed),
            ];
            for a in &applied {
                comments.push(format!(
                    "correction: gas = {}, mu = {}, baseline_mean = {}, samples = {}{}",
                    a.gas,
                    a.mu,
                    io::fmt_g12(a.baseline_mean),
                    a.baseline_samples,
                    if a.window_overlaps_peak {
                        ", warning: baseline window overlaps the pulse"
                    } else {
                        ""
                    }
                ));
                if a.window_overlaps_peak {
                    eprintln!(
                        "warning: gas {}: baseline window mean exceeds 10% of the peak",
                        a.gas
                    );
                }
            }
            io::write_flux_csv(&args.out, &corrected, &comments)?;
            println!("preprocessed {} gases", corrected.gases.len());
            Ok(())
        }
        _ => bail!("use either --features <csv> or both --flux <csv> and --calib <file>"),
    }
}

fn parse_terms(spec: &str, gas: &str) -> Result<Vec<TermDescriptor>> {
    if spec == "full" {
        return Ok(TermDescriptor::full_set(gas));
    }
    let list = spec
        .strip_prefix("custom:")
        .ok_or_else(|| anyhow!("--terms must be 'full' or 'custom:<C,U,CU,CU2,U2 list>'"))?;
    let mut terms = Vec::new();
    for item in list.split(',') {
        let kind = match item.trim() {
            "C" => TermKind::C,
            "U" => TermKind::U,
            "CU" => TermKind::CU,
            "CU2" => TermKind::CU2,
            "U2" => TermKind::U2,
            other => bail!("unknown term '{other}'"),
        };
        terms.push(TermDescriptor::new(kind, gas));
    }
    if terms.is_empty() {
        bail!("empty term list");
    }
    Ok(terms)
}

fn penalty_from(args: &FitArgs, method: Method) -> PenaltySpec {
    let mut pen = match method {
        Method::Lasso => PenaltySpec::lasso(),
        _ => PenaltySpec::scad(),
    };
    pen.method = method;
    pen.cv_folds = args.folds;
    pen.seed = args.seed;
    if args.random_folds {
        pen.fold_strategy = tapkin::regress::FoldStrategy::SeededRandom;
    }
    pen
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let features = io::load_features_csv(&args.features)?;
    let method = match args.method.as_str() {
        "ols" => Method::Ols,
        "lasso" => Method::Lasso,
        "scad" => Method::Scad,
        other => bail!("unknown method '{other}' (use ols, lasso, or scad)"),
    };
    let mut report = Report::new("tapkin fit");
    report.push("features", args.features.display());
    report.push("method", &args.method);
    report.push("seed", args.seed);
    report.push("folds", args.folds);

    if args.mechanism_line {
        let find = |gas: &str| {
            features
                .iter()
                .find(|f| f.gas_id == gas)
                .ok_or_else(|| anyhow!("mechanism line needs gas '{gas}' in the feature file"))
        };
        let o2 = find("O2")?;
        let co = find("CO")?;
        let q_o2 = compute_rcd(o2, Role::Reactant, Transform::Sqrt, None)?;
        let q_co = compute_rcd(co, Role::Reactant, Transform::Identity, None)?;
        let pen = penalty_from(&args, method);
        let line = fit_mechanism_line(&q_co, &q_o2, &pen)?;
        report.push("mode", "mechanism-line");
        report.add_mechanism_line(&line);
        report.write(&args.out)?;
        println!(
            "mechanism line: intercept = {}, slope = {}",
            io::fmt_g12(line.intercept),
            io::fmt_g12(line.slope)
        );
        return Ok(());
    }

    let gas = match &args.gas {
        Some(g) => g.clone(),
        None if features.len() == 1 => features[0].gas_id.clone(),
        None => bail!("file has {} gases; pick one with --gas", features.len()),
    };
    let target = features
        .iter()
        .find(|f| f.gas_id == gas)
        .ok_or_else(|| anyhow!("gas '{gas}' not present"))?;
    let terms = parse_terms(&args.terms, &gas)?;
    let refs: Vec<&tapkin::features::TransientFeatures> = features.iter().collect();
    let dm = build_design_matrix(&refs, &terms, &target.rate.clone())?;
    let fit = match method {
        Method::Ols => fit_ols(&dm)?,
        Method::Lasso => fit_lasso(&dm, &penalty_from(&args, method))?,
        Method::Scad => fit_scad(&dm, &penalty_from(&args, method))?,
    };
    report.push("mode", "rate-reactivity");
    report.push("gas", &gas);
    report.add_fit(&fit);
    report.write(&args.out)?;
    let chosen: Vec<&str> = fit
        .terms
        .iter()
        .zip(&fit.selected)
        .filter(|(_, &s)| s)
        .map(|(t, _)| t.label.as_str())
        .collect();
    println!("selected terms: {}", chosen.join(", "));
    Ok(())
}

fn cmd_rcdc(args: RcdcArgs) -> Result<()> {
    let features = io::load_features_csv(&args.features)?;
    let products: Vec<&str> = args
        .products
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    let sqrts: Vec<&str> = args
        .sqrt
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    let mut series: Vec<RCDSeries> = Vec::new();
    for f in &features {
        let role = if products.contains(&f.gas_id.as_str()) {
            Role::Product
        } else {
            Role::Reactant
        };
        let transform = if role == Role::Reactant && sqrts.contains(&f.gas_id.as_str()) {
            Transform::Sqrt
        } else {
            Transform::Identity
        };
        series.push(compute_rcd(f, role, transform, None)?);
    }
    let refs: Vec<&RCDSeries> = series.iter().collect();
    let matrix = if args.trim > 0.0 {
        robust_matrix(&refs, args.trim)?
    } else {
        rcdc(&refs)?
    };
    let comments = vec![
        format!("tool = tapkin {}", env!("CARGO_PKG_VERSION")),
        format!("source = {}", args.features.display()),
        format!("trim = {}", args.trim),
        format!("aligned_points = {}", matrix.n_points),
        format!("seed = {}", args.seed),
    ];
    io::write_rcdc_csv(&args.out, &matrix, &comments)?;

    let reactants: Vec<&str> = matrix
        .labels
        .iter()
        .map(String::as_str)
        .filter(|l| !products.contains(l))
        .collect();
    if reactants.len() == 2 && products.len() == 1 {
        let call = classify_mechanism(&matrix, (reactants[0], reactants[1]), products[0])?;
        println!(
            "verdict: {:?} (corr {} -> {} = {}, corr {} -> {} = {})",
            call.verdict,
            reactants[0],
            products[0],
            io::fmt_g12(call.corr_reactant1),
            reactants[1],
            products[0],
            io::fmt_g12(call.corr_reactant2)
        );
    } else {
        println!("rcdc over {} aligned points", matrix.n_points);
    }
    Ok(())
}

/// Pairwise winsorized correlations over the aligned window.
fn robust_matrix(series: &[&RCDSeries], trim: f64) -> Result<tapkin::mechanism::RCDCMatrix> {
    use tapkin::mechanism::robust_correlation;
    let n = series[0].values.len();
    let aligned: Vec<usize> = (0..n)
        .filter(|&k| series.iter().all(|s| s.mask[k]))
        .collect();
    let values: Vec<Vec<f64>> = series
        .iter()
        .map(|s| aligned.iter().map(|&k| s.values[k]).collect())
        .collect();
    let m = series.len();
    let mut corr = vec![vec![None; m]; m];
    for i in 0..m {
        for j in i..m {
            let c = robust_correlation(&values[i], &values[j], trim).ok();
            corr[i][j] = c;
            corr[j][i] = c;
        }
    }
    Ok(tapkin::mechanism::RCDCMatrix {
        labels: series.iter().map(|s| s.gas_id.clone()).collect(),
        corr,
        n_points: aligned.len(),
    })
}

fn cmd_grid(args: GridArgs) -> Result<()> {
    let config = presets::normalized_config();
    if !(args.step > 0.0) {
        bail!("--step must be positive");
    }
    let axis = axis_range(0.04, 1.0, args.step);
    let grid = match args.sweep.as_str() {
        "er-irrev" => grid_sweep_irreversible(SweepKind::ErIrreversible, &axis, &axis, &config)?,
        "lh-irrev" => grid_sweep_irreversible(SweepKind::LhIrreversible, &axis, &axis, &config)?,
        "lh-rev" => grid_sweep_reversible(&axis, &axis, &config)?,
        other => bail!("unknown sweep '{other}' (use er-irrev, lh-irrev, or lh-rev)"),
    };
    let comments = vec![
        format!("tool = tapkin {}", env!("CARGO_PKG_VERSION")),
        format!("sweep = {}", args.sweep),
        format!("step = {}", args.step),
        format!("axis = [0.04, 1.00]"),
        format!("seed = {}", args.seed),
    ];
    io::write_grid_csv(&args.out, &grid, &comments)?;
    let valid = grid.cells.iter().flatten().filter(|c| c.is_some()).count();
    println!(
        "swept {} cells ({} valid)",
        grid.axis1.len() * grid.axis2.len(),
        valid
    );
    Ok(())
}
