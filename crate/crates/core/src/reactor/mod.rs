//! One-dimensional diffusion-driven pulse-response simulation through
//! inert / thin-catalyst / inert zones.
//!
//! The gas phase obeys `eps dC/dt = D d2C/dx2` on a cell-centered grid with a
//! zero-flux inlet face and a vacuum (zero concentration) outlet face. The
//! pulse enters as an initial condition in the first cell. The catalyst
//! occupies one interior cell whose reaction source couples the gas phase to
//! the surface-species balances. Channel extents are carried as extra states
//! so surface coverages, uptake integrals, and reaction bookkeeping are exact
//! up to integrator tolerance.

pub mod mechanism;
pub mod presets;

mod integrator;
mod system;

pub use mechanism::{MechanismKind, MechanismSpec};

use thiserror::Error;

use crate::grid::UniformGrid;
use integrator::{integrate, StepSink, Tolerances};
use mechanism::{Kinetics, SeriesRule};
use system::TapSystem;

/// Default integrator tolerances.
pub const RTOL: f64 = 1e-8;
pub const ATOL: f64 = 1e-12;

/// Tolerated negative-concentration excursion, relative to the initial pulse
/// peak. Larger excursions signal an unstable discretization.
const NEG_CONC_REL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid reactor configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid mechanism: {0}")]
    InvalidMechanism(String),
    #[error("integrator failed at t = {t:.6e} with step {h:.3e}: {detail}")]
    Integration { t: f64, h: f64, detail: String },
    #[error(
        "negative concentration {min:.3e} at t = {t:.6e} exceeds tolerance {tol:.3e}; \
         the spatial discretization is unstable for this configuration"
    )]
    NegativeConcentration { t: f64, min: f64, tol: f64 },
    #[error("unknown gas '{0}'")]
    UnknownGas(String),
}

/// Geometry, transport, pulse, and output-grid parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactorConfig {
    /// Total reactor length, m.
    pub length: f64,
    /// Bed porosity (void fraction).
    pub porosity: f64,
    /// Effective diffusivity, m^2/s.
    pub diffusivity: f64,
    /// Moles injected per pulsed gas.
    pub pulse_moles: f64,
    /// Simulated span, s.
    pub t_end: f64,
    /// Output sampling interval, s.
    pub dt_out: f64,
    /// Number of spatial cells.
    pub n_cells: usize,
    /// Index of the thin catalyst zone.
    pub catalyst_cell: usize,
}

impl ReactorConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let err = |msg: String| Err(SimError::InvalidConfig(msg));
        if !(self.length > 0.0) {
            return err(format!("length must be > 0, got {}", self.length));
        }
        if !(self.porosity > 0.0 && self.porosity < 1.0) {
            return err(format!(
                "porosity must lie in (0, 1), got {}",
                self.porosity
            ));
        }
        if !(self.diffusivity > 0.0) {
            return err(format!("diffusivity must be > 0, got {}", self.diffusivity));
        }
        if !(self.pulse_moles >= 0.0) {
            return err(format!(
                "pulse_moles must be >= 0, got {}",
                self.pulse_moles
            ));
        }
        if !(self.t_end > self.dt_out && self.dt_out > 0.0) {
            return err(format!(
                "need t_end > dt_out > 0, got t_end = {}, dt_out = {}",
                self.t_end, self.dt_out
            ));
        }
        if self.n_cells < 50 {
            return err(format!("n_cells must be >= 50, got {}", self.n_cells));
        }
        if self.catalyst_cell == 0 || self.catalyst_cell >= self.n_cells - 1 {
            return err(format!(
                "catalyst_cell must be strictly interior (1..{}), got {}",
                self.n_cells - 2,
                self.catalyst_cell
            ));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n_cells as f64
    }

    pub fn output_grid(&self) -> UniformGrid {
        UniformGrid::from_span(self.t_end, self.dt_out)
    }
}

/// Everything the rest of the pipeline needs from one simulation.
#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub grid: UniformGrid,
    pub gases: Vec<String>,
    pub surfaces: Vec<String>,
    /// Outlet flux per gas, mol/s.
    pub flux: Vec<Vec<f64>>,
    /// Thin-zone gas concentration per gas, mol/m.
    pub thin_conc: Vec<Vec<f64>>,
    /// Reaction-rate series per gas in the mechanism's written convention.
    pub rate: Vec<Vec<f64>>,
    /// Surface uptake series associated with each gas, mol/m.
    pub uptake: Vec<Vec<f64>>,
    /// Signed stoichiometry over gas rate series reproducing each uptake.
    pub uptake_stoich: Vec<Vec<(String, f64)>>,
    /// Coverage trajectory per surface species, mol/m.
    pub coverage: Vec<Vec<f64>>,
    pub injected: Vec<f64>,
    pub exited: Vec<f64>,
    pub gas_holdup: Vec<f64>,
    pub mass_balance_defect: f64,
    pub steps: usize,
}

impl SimulationResult {
    pub fn gas_index(&self, gas: &str) -> Result<usize, SimError> {
        self.gases
            .iter()
            .position(|g| g == gas)
            .ok_or_else(|| SimError::UnknownGas(gas.to_string()))
    }
}

/// Collects sampled border quantities at output times while the integrator
/// runs, and tracks the most negative concentration seen.
struct OutputSampler {
    grid: UniformGrid,
    next: usize,
    /// tracked state indices: per gas thin cell and exit cell, then extents
    tracked: Vec<usize>,
    samples: Vec<Vec<f64>>,
    min_conc: f64,
    min_conc_t: f64,
    n_gas_states: usize,
}

impl StepSink for OutputSampler {
    fn accepted(&mut self, t0: f64, y0: &[f64], f0: &[f64], t1: f64, y1: &[f64], f1: &[f64]) {
        while self.next < self.grid.len() && self.grid.time(self.next) <= t1 + 1e-12 {
            let t = self.grid.time(self.next).min(t1);
            let mut row = vec![0.0; self.tracked.len()];
            // componentwise Hermite on the tracked indices only
            let h = t1 - t0;
            let s = (t - t0) / h;
            let (s2, s3) = (s * s, s * s * s);
            let (a, b, c, e) = (
                2.0 * s3 - 3.0 * s2 + 1.0,
                s3 - 2.0 * s2 + s,
                -2.0 * s3 + 3.0 * s2,
                s3 - s2,
            );
            for (k, &idx) in self.tracked.iter().enumerate() {
                row[k] = a * y0[idx] + b * h * f0[idx] + c * y1[idx] + e * h * f1[idx];
            }
            self.samples.push(row);
            self.next += 1;
        }
        for &v in y1.iter().take(self.n_gas_states) {
            if v < self.min_conc {
                self.min_conc = v;
                self.min_conc_t = t1;
            }
        }
    }
}

/// Simulates one pulse with the pinned default tolerances.
pub fn simulate_pulse(
    config: &ReactorConfig,
    mech: &MechanismSpec,
) -> Result<SimulationResult, SimError> {
    simulate_pulse_with_tolerances(config, mech, RTOL, ATOL)
}

/// Simulation entry point with explicit tolerances, used by fine-grid
/// reference solves in tests.
pub fn simulate_pulse_with_tolerances(
    config: &ReactorConfig,
    mech: &MechanismSpec,
    rtol: f64,
    atol: f64,
) -> Result<SimulationResult, SimError> {
    config.validate()?;
    mech.validate()?;
    let kin = mech.kinetics();
    run_simulation(config, &kin, rtol, atol)
}

fn run_simulation(
    config: &ReactorConfig,
    kin: &Kinetics,
    rtol: f64,
    atol: f64,
) -> Result<SimulationResult, SimError> {
    let n = config.n_cells;
    let ng = kin.n_gases();
    let nch = kin.n_channels();
    let ns = kin.n_surfaces();
    let grid = config.output_grid();
    let dx = config.dx();
    let pulse_conc = config.pulse_moles / (config.porosity * dx);

    let mut sys = TapSystem::new(config, kin);
    let mut y = vec![0.0; sys.n_states()];

    // tracked indices: per gas (thin cell, exit cell), then extents
    let mut tracked = Vec::with_capacity(2 * ng + nch);
    for g in 0..ng {
        tracked.push(sys.gas_offset(g) + config.catalyst_cell);
        tracked.push(sys.gas_offset(g) + n - 1);
    }
    for c in 0..nch {
        tracked.push(sys.extent_offset() + c);
    }
    let mut sampler = OutputSampler {
        grid: grid.clone(),
        next: 0,
        tracked,
        samples: Vec::with_capacity(grid.len()),
        min_conc: 0.0,
        min_conc_t: 0.0,
        n_gas_states: ng * n,
    };

    // injections sorted by delay; delay 0 applies before integration starts
    let mut injections: Vec<(usize, f64)> = kin.pulsed.clone();
    injections.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    for &(g, delay) in &injections {
        if delay == 0.0 {
            y[sys.gas_offset(g)] += pulse_conc;
        }
    }
    // t = 0 sample reflects the initial condition
    {
        let row: Vec<f64> = sampler.tracked.iter().map(|&i| y[i]).collect();
        sampler.samples.push(row);
        sampler.next = 1;
    }

    let tol = Tolerances { rtol, atol };
    let mut steps = 0usize;
    let mut t = 0.0;
    for &(g, delay) in injections.iter().filter(|&&(_, d)| d > 0.0) {
        let stop = delay.min(config.t_end);
        if stop > t {
            let stats = integrate(&mut sys, &mut y, t, stop, &tol, &mut sampler)?;
            steps += stats.steps;
            t = stop;
        }
        if delay < config.t_end {
            y[sys.gas_offset(g)] += pulse_conc;
        }
    }
    if t < grid.t_end() {
        let stats = integrate(&mut sys, &mut y, t, grid.t_end(), &tol, &mut sampler)?;
        steps += stats.steps;
    }

    let neg_tol = NEG_CONC_REL * pulse_conc.max(1.0);
    if sampler.min_conc < -neg_tol {
        return Err(SimError::NegativeConcentration {
            t: sampler.min_conc_t,
            min: sampler.min_conc,
            tol: neg_tol,
        });
    }
    // flush any endpoint sample lost to floating-point slack in the stop time
    while sampler.next < grid.len() {
        let row: Vec<f64> = sampler.tracked.iter().map(|&i| y[i]).collect();
        sampler.samples.push(row);
        sampler.next += 1;
    }
    debug_assert_eq!(sampler.samples.len(), grid.len());

    // Assemble output series. Rates are re-evaluated from interpolated states
    // so the emitted (rate, concentration, uptake) triples satisfy the rate
    // laws pointwise.
    let flux_coeff = 2.0 * config.diffusivity / dx;
    let mut flux = vec![vec![0.0; grid.len()]; ng];
    let mut thin_conc = vec![vec![0.0; grid.len()]; ng];
    let mut rate = vec![vec![0.0; grid.len()]; ng];
    let mut coverage = vec![vec![0.0; grid.len()]; ns];
    let mut xi_series = vec![vec![0.0; grid.len()]; nch];
    let mut r_scratch = vec![0.0; nch];
    let mut cov_scratch = vec![0.0; ns];
    for (k, row) in sampler.samples.iter().enumerate() {
        let c_thin: Vec<f64> = (0..ng).map(|g| row[2 * g]).collect();
        let xi: Vec<f64> = (0..nch).map(|c| row[2 * ng + c]).collect();
        sys.channel_rates(&c_thin, &xi, &mut r_scratch);
        kin.coverages(&xi, &mut cov_scratch);
        for g in 0..ng {
            thin_conc[g][k] = c_thin[g];
            flux[g][k] = flux_coeff * row[2 * g + 1];
            let SeriesRule::Channel(ch, sign) = kin.rate_series_sign[g];
            rate[g][k] = sign * r_scratch[ch];
        }
        for s in 0..ns {
            coverage[s][k] = cov_scratch[s];
        }
        for c in 0..nch {
            xi_series[c][k] = xi[c];
        }
    }

    // Per-gas uptake from extents: integral of a gas's emitted rate series is
    // sign * xi[channel], so the stoichiometric sums are exact.
    let mut uptake = vec![vec![0.0; grid.len()]; ng];
    for g in 0..ng {
        for &(ref gas_name, nu) in &kin.uptake_stoich[g] {
            let gi = kin.gases.iter().position(|x| x == gas_name).unwrap();
            let SeriesRule::Channel(ch, sign) = kin.rate_series_sign[gi];
            for k in 0..grid.len() {
                uptake[g][k] += nu * sign * xi_series[ch][k];
            }
        }
    }

    // Mass balance at t_end from the final state.
    let injected: Vec<f64> = (0..ng)
        .map(|g| {
            kin.pulsed
                .iter()
                .filter(|&&(pg, d)| pg == g && d < config.t_end)
                .map(|_| config.pulse_moles)
                .sum()
        })
        .collect();
    let total_injected: f64 = injected.iter().sum();
    let mut gas_holdup = vec![0.0; ng];
    let mut exited = vec![0.0; ng];
    let mut defect: f64 = 0.0;
    let xi_end = &y[sys.extent_offset()..sys.extent_offset() + nch];
    for g in 0..ng {
        gas_holdup[g] = y[sys.gas_offset(g)..sys.gas_offset(g) + n]
            .iter()
            .sum::<f64>()
            * config.porosity
            * dx;
        exited[g] = y[sys.exited_offset() + g];
        let reacted: f64 = kin.gas_source[g]
            .iter()
            .zip(xi_end)
            .map(|(s, x)| s * x)
            .sum();
        let residual = injected[g] + reacted - gas_holdup[g] - exited[g];
        if total_injected > 0.0 {
            defect = defect.max((residual / total_injected).abs());
        }
    }

    Ok(SimulationResult {
        grid,
        gases: kin.gases.clone(),
        surfaces: kin.surfaces.clone(),
        flux,
        thin_conc,
        rate,
        uptake,
        uptake_stoich: kin.uptake_stoich.clone(),
        coverage,
        injected,
        exited,
        gas_holdup,
        mass_balance_defect: defect,
        steps,
    })
}

/// Analytic outlet flux of an inert pulse through a uniform diffusive bed:
///
/// ```text
/// F(t) = (pulse D pi / (eps L^2)) sum_{n>=0} (-1)^n (2n+1)
///        exp(-(n + 1/2)^2 pi^2 D t / (eps L^2))
/// ```
///
/// The series is truncated once a term falls below 1e-12 of the running sum
/// past the magnitude hump. Entries with `t <= 0` yield zero flux.
pub fn standard_diffusion_curve(t_grid: &[f64], config: &ReactorConfig) -> Vec<f64> {
    let tau_scale = config.diffusivity / (config.porosity * config.length * config.length);
    let amp = config.pulse_moles * config.diffusivity * std::f64::consts::PI
        / (config.porosity * config.length * config.length);
    t_grid
        .iter()
        .map(|&t| {
            if t <= 0.0 {
                return 0.0;
            }
            let tau = t * tau_scale;
            let mut sum = 0.0;
            let mut prev_mag = f64::INFINITY;
            for n in 0..200_000u64 {
                let half = n as f64 + 0.5;
                let term = (if n % 2 == 0 { 1.0 } else { -1.0 })
                    * (2.0 * n as f64 + 1.0)
                    * (-half * half * std::f64::consts::PI * std::f64::consts::PI * tau).exp();
                sum += term;
                let mag = term.abs();
                if mag < prev_mag && mag < 1e-12 * sum.abs().max(1e-300) {
                    break;
                }
                prev_mag = mag;
            }
            amp * sum
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::trapezoid;

    #[test]
    fn sdc_integral_is_pulse_moles() {
        let config = presets::normalized_config();
        // integrate far into the tail; remainder is exponentially negligible
        let dt = 5e-4;
        let n = (10.0 / dt) as usize + 1;
        let ts: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
        let f = standard_diffusion_curve(&ts, &config);
        let total = trapezoid(&f, dt);
        assert!(
            (total - config.pulse_moles).abs() / config.pulse_moles < 1e-6,
            "integral {total}"
        );
    }

    #[test]
    fn sdc_zero_for_nonpositive_time() {
        let config = presets::normalized_config();
        let f = standard_diffusion_curve(&[-1.0, 0.0, 1e-3], &config);
        assert_eq!(f[0], 0.0);
        assert_eq!(f[1], 0.0);
        // the pulse has not reached the outlet yet; only float noise remains
        assert!(f[2].abs() < 1e-9);
    }

    #[test]
    fn sdc_decays_monotonically_after_peak() {
        let config = presets::normalized_config();
        let ts: Vec<f64> = (1..3000).map(|k| k as f64 * 1e-3).collect();
        let f = standard_diffusion_curve(&ts, &config);
        let peak = f
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        for w in f[peak..].windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn config_validation_catches_bad_fields() {
        let mut c = presets::normalized_config();
        c.porosity = 1.2;
        assert!(c.validate().is_err());
        let mut c = presets::normalized_config();
        c.n_cells = 10;
        assert!(c.validate().is_err());
        let mut c = presets::normalized_config();
        c.catalyst_cell = 0;
        assert!(c.validate().is_err());
        let mut c = presets::normalized_config();
        c.catalyst_cell = c.n_cells - 1;
        assert!(c.validate().is_err());
    }
}
