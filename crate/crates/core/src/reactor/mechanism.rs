//! Mechanism presets: rate laws, surface-species bookkeeping, and analytic
//! partial derivatives used by the implicit integrator.
//!
//! Every mechanism is expressed through reaction channels. A channel consumes
//! one gas at the thin zone with a rate that may depend on surface coverages.
//! Coverages are linear combinations of the channel extents
//! `xi_c(t) = integral of r_c dt`, so surface balances hold exactly by
//! construction.

use std::collections::BTreeMap;

use super::SimError;

/// Mechanism family. Single-gas kinds describe one adsorbing gas `A`;
/// the CO-oxidation kinds describe the O2/CO/CO2 system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MechanismKind {
    /// First-order apparent adsorption, site balance omitted.
    IrreversibleAbundant,
    /// Irreversible adsorption on a finite site pool.
    IrreversibleLimited,
    /// Adsorption/desorption on a finite site pool.
    Reversible,
    /// Dissociative oxygen uptake; gas-phase CO strips adsorbed oxygen.
    EleyRideal,
    /// Dissociative oxygen uptake and molecular CO adsorption; adsorbed
    /// pairs combine to CO2.
    LangmuirHinshelwood,
}

/// Rate constants and site count for one mechanism.
///
/// `k_forward` and `k_reverse` are keyed by gas label. Units follow the
/// thin-zone convention: adsorption constants in m^2/mol/s, apparent
/// first-order constants in m/s, desorption constants in m/s.
///
/// For `LangmuirHinshelwood`, `k_forward["CO2"] = f64::INFINITY` selects the
/// fast-conversion limit: adsorbed CO reacts away on contact, the CO coverage
/// is identically zero, and the CO2 formation rate equals the CO uptake rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanismSpec {
    pub kind: MechanismKind,
    pub k_forward: BTreeMap<String, f64>,
    pub k_reverse: BTreeMap<String, f64>,
    /// Total active sites, normalized per unit thin-zone length (mol/m).
    pub n_sites: f64,
    /// Delay before the second pulsed gas (CO) is injected, seconds.
    pub co_delay: f64,
}

impl MechanismSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        for (gas, &k) in self.k_forward.iter().chain(self.k_reverse.iter()) {
            if !(k >= 0.0) {
                return Err(SimError::InvalidMechanism(format!(
                    "rate constant for {gas} must be >= 0, got {k}"
                )));
            }
        }
        let needs_sites = !matches!(self.kind, MechanismKind::IrreversibleAbundant);
        if needs_sites && !(self.n_sites > 0.0) {
            return Err(SimError::InvalidMechanism(format!(
                "n_sites must be > 0 for {:?}, got {}",
                self.kind, self.n_sites
            )));
        }
        if !(self.co_delay >= 0.0) {
            return Err(SimError::InvalidMechanism(format!(
                "co_delay must be >= 0, got {}",
                self.co_delay
            )));
        }
        for gas in self.required_constants() {
            if !self.k_forward.contains_key(*gas) {
                return Err(SimError::InvalidMechanism(format!(
                    "{:?} requires k_forward[{gas}]",
                    self.kind
                )));
            }
        }
        if self.fast_co2_limit() && self.kf("CO") >= 2.0 * self.kf("O2") * self.n_sites {
            return Err(SimError::InvalidMechanism(format!(
                "the instantaneous-CO2 limit needs k_CO < 2 k_O N so the adsorbed-CO pool \
                 stays negligible; got k_CO = {} vs 2 k_O N = {}",
                self.kf("CO"),
                2.0 * self.kf("O2") * self.n_sites
            )));
        }
        Ok(())
    }

    fn required_constants(&self) -> &'static [&'static str] {
        match self.kind {
            MechanismKind::IrreversibleAbundant
            | MechanismKind::IrreversibleLimited
            | MechanismKind::Reversible => &["A"],
            MechanismKind::EleyRideal => &["O2", "CO"],
            MechanismKind::LangmuirHinshelwood => &["O2", "CO", "CO2"],
        }
    }

    fn kf(&self, gas: &str) -> f64 {
        self.k_forward.get(gas).copied().unwrap_or(0.0)
    }

    fn kr(&self, gas: &str) -> f64 {
        self.k_reverse.get(gas).copied().unwrap_or(0.0)
    }

    /// True when the Langmuir-Hinshelwood CO2 step is treated as instantaneous.
    pub fn fast_co2_limit(&self) -> bool {
        self.kind == MechanismKind::LangmuirHinshelwood && self.kf("CO2").is_infinite()
    }

    /// Compiles the mechanism into the channel tables used by the solver.
    pub(crate) fn kinetics(&self) -> Kinetics {
        let n = self.n_sites;
        match self.kind {
            MechanismKind::IrreversibleAbundant => Kinetics {
                gases: vec!["A".into()],
                pulsed: vec![(0, 0.0)],
                surfaces: vec!["A*".into()],
                coverage_of_extent: vec![vec![1.0]],
                channel_gas: vec![0],
                gas_source: vec![vec![-1.0]],
                rate_rule: RateRule::SingleGas {
                    kf: self.kf("A"),
                    kr: 0.0,
                    n_sites: f64::INFINITY,
                },
                rate_series_sign: vec![SeriesRule::Channel(0, 1.0)],
                uptake_stoich: vec![vec![("A".into(), 1.0)]],
            },
            MechanismKind::IrreversibleLimited | MechanismKind::Reversible => Kinetics {
                gases: vec!["A".into()],
                pulsed: vec![(0, 0.0)],
                surfaces: vec!["A*".into()],
                coverage_of_extent: vec![vec![1.0]],
                channel_gas: vec![0],
                gas_source: vec![vec![-1.0]],
                rate_rule: RateRule::SingleGas {
                    kf: self.kf("A"),
                    kr: if self.kind == MechanismKind::Reversible {
                        self.kr("A")
                    } else {
                        0.0
                    },
                    n_sites: n,
                },
                rate_series_sign: vec![SeriesRule::Channel(0, 1.0)],
                uptake_stoich: vec![vec![("A".into(), 1.0)]],
            },
            MechanismKind::EleyRideal => Kinetics {
                gases: vec!["O2".into(), "CO".into(), "CO2".into()],
                pulsed: vec![(0, 0.0), (1, self.co_delay)],
                surfaces: vec!["O*".into()],
                coverage_of_extent: vec![vec![2.0, -1.0]],
                channel_gas: vec![0, 1],
                gas_source: vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![0.0, 1.0]],
                rate_rule: RateRule::EleyRideal {
                    k_o: self.kf("O2"),
                    k_co: self.kf("CO"),
                    n_sites: n,
                },
                // CO2 is written as the negative of the CO step: the product
                // rate carries the release sign.
                rate_series_sign: vec![
                    SeriesRule::Channel(0, 1.0),
                    SeriesRule::Channel(1, 1.0),
                    SeriesRule::Channel(1, -1.0),
                ],
                uptake_stoich: vec![
                    vec![("O2".into(), 2.0), ("CO".into(), -1.0)],
                    vec![("CO".into(), 1.0), ("CO2".into(), 1.0)],
                    vec![],
                ],
            },
            MechanismKind::LangmuirHinshelwood if self.fast_co2_limit() => Kinetics {
                gases: vec!["O2".into(), "CO".into(), "CO2".into()],
                pulsed: vec![(0, 0.0), (1, self.co_delay)],
                surfaces: vec!["O*".into()],
                coverage_of_extent: vec![vec![2.0, -1.0]],
                channel_gas: vec![0, 1],
                gas_source: vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![0.0, 1.0]],
                rate_rule: RateRule::LhFastCo2 {
                    k_o: self.kf("O2"),
                    k_co: self.kf("CO"),
                    n_sites: n,
                },
                rate_series_sign: vec![
                    SeriesRule::Channel(0, 1.0),
                    SeriesRule::Channel(1, 1.0),
                    SeriesRule::Channel(1, 1.0),
                ],
                uptake_stoich: vec![
                    vec![("O2".into(), 2.0), ("CO2".into(), -1.0)],
                    vec![("CO".into(), 1.0), ("CO2".into(), -1.0)],
                    vec![],
                ],
            },
            MechanismKind::LangmuirHinshelwood => Kinetics {
                gases: vec!["O2".into(), "CO".into(), "CO2".into()],
                pulsed: vec![(0, 0.0), (1, self.co_delay)],
                surfaces: vec!["O*".into(), "CO*".into()],
                coverage_of_extent: vec![vec![2.0, 0.0, -1.0], vec![0.0, 1.0, -1.0]],
                channel_gas: vec![0, 1, 2],
                gas_source: vec![
                    vec![-1.0, 0.0, 0.0],
                    vec![0.0, -1.0, 0.0],
                    vec![0.0, 0.0, 1.0],
                ],
                rate_rule: RateRule::LangmuirHinshelwood {
                    k_o: self.kf("O2"),
                    k_co: self.kf("CO"),
                    k_co_rev: self.kr("CO"),
                    k_co2: self.kf("CO2"),
                    n_sites: n,
                },
                rate_series_sign: vec![
                    SeriesRule::Channel(0, 1.0),
                    SeriesRule::Channel(1, 1.0),
                    SeriesRule::Channel(2, 1.0),
                ],
                uptake_stoich: vec![
                    vec![("O2".into(), 2.0), ("CO2".into(), -1.0)],
                    vec![("CO".into(), 1.0), ("CO2".into(), -1.0)],
                    vec![],
                ],
            },
        }
    }
}

/// How a gas's emitted rate series maps onto channel rates.
#[derive(Debug, Clone, Copy)]
pub(crate) enum SeriesRule {
    /// `sign * r[channel]`
    Channel(usize, f64),
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum RateRule {
    SingleGas {
        kf: f64,
        kr: f64,
        n_sites: f64,
    },
    EleyRideal {
        k_o: f64,
        k_co: f64,
        n_sites: f64,
    },
    LangmuirHinshelwood {
        k_o: f64,
        k_co: f64,
        k_co_rev: f64,
        k_co2: f64,
        n_sites: f64,
    },
    LhFastCo2 {
        k_o: f64,
        k_co: f64,
        n_sites: f64,
    },
}

/// Compiled channel tables for one mechanism.
pub(crate) struct Kinetics {
    pub gases: Vec<String>,
    /// (gas index, injection delay)
    pub pulsed: Vec<(usize, f64)>,
    pub surfaces: Vec<String>,
    /// coverage[s] = sum_c coverage_of_extent[s][c] * xi[c]
    pub coverage_of_extent: Vec<Vec<f64>>,
    /// gas whose thin-zone concentration enters each channel rate
    pub channel_gas: Vec<usize>,
    /// gas_source[g][c]: molar source of gas g per unit channel rate
    pub gas_source: Vec<Vec<f64>>,
    pub rate_rule: RateRule,
    /// per-gas rule mapping channel rates to the emitted rate series
    pub rate_series_sign: Vec<SeriesRule>,
    /// per-gas signed stoichiometry over gas rate series reproducing its uptake
    pub uptake_stoich: Vec<Vec<(String, f64)>>,
}

impl Kinetics {
    pub fn n_channels(&self) -> usize {
        self.channel_gas.len()
    }

    pub fn n_gases(&self) -> usize {
        self.gases.len()
    }

    pub fn n_surfaces(&self) -> usize {
        self.surfaces.len()
    }

    pub fn coverages(&self, extents: &[f64], out: &mut [f64]) {
        for (s, row) in self.coverage_of_extent.iter().enumerate() {
            out[s] = row.iter().zip(extents).map(|(a, x)| a * x).sum();
        }
    }

    /// Channel rates at the given thin-zone concentrations and coverages.
    pub fn rates(&self, c_thin: &[f64], cov: &[f64], out: &mut [f64]) {
        match self.rate_rule {
            RateRule::SingleGas { kf, kr, n_sites } => {
                let site = if n_sites.is_infinite() {
                    1.0
                } else {
                    n_sites - cov[0]
                };
                out[0] = if n_sites.is_infinite() {
                    kf * c_thin[0]
                } else {
                    kf * c_thin[0] * site - kr * cov[0]
                };
            }
            RateRule::EleyRideal { k_o, k_co, n_sites } => {
                let free = n_sites - cov[0];
                out[0] = k_o * c_thin[0] * free * free;
                out[1] = k_co * c_thin[1] * cov[0];
            }
            RateRule::LhFastCo2 { k_o, k_co, n_sites } => {
                let free = n_sites - cov[0];
                out[0] = k_o * c_thin[0] * free * free;
                out[1] = k_co * c_thin[1] * free;
            }
            RateRule::LangmuirHinshelwood {
                k_o,
                k_co,
                k_co_rev,
                k_co2,
                n_sites,
            } => {
                let free_o = n_sites - cov[0];
                out[0] = k_o * c_thin[0] * free_o * free_o;
                out[1] = k_co * c_thin[1] * (n_sites - cov[0] - cov[1]) - k_co_rev * cov[1];
                out[2] = k_co2 * cov[0] * cov[1];
            }
        }
    }

    /// `d r_c / d c_thin[channel_gas[c]]` and `d r_c / d cov[s]`.
    pub fn rate_partials(
        &self,
        c_thin: &[f64],
        cov: &[f64],
        d_dc: &mut [f64],
        d_dcov: &mut [Vec<f64>],
    ) {
        for row in d_dcov.iter_mut() {
            for v in row.iter_mut() {
                *v = 0.0;
            }
        }
        match self.rate_rule {
            RateRule::SingleGas { kf, kr, n_sites } => {
                if n_sites.is_infinite() {
                    d_dc[0] = kf;
                } else {
                    d_dc[0] = kf * (n_sites - cov[0]);
                    d_dcov[0][0] = -kf * c_thin[0] - kr;
                }
            }
            RateRule::EleyRideal { k_o, k_co, n_sites } => {
                let free = n_sites - cov[0];
                d_dc[0] = k_o * free * free;
                d_dcov[0][0] = -2.0 * k_o * c_thin[0] * free;
                d_dc[1] = k_co * cov[0];
                d_dcov[1][0] = k_co * c_thin[1];
            }
            RateRule::LhFastCo2 { k_o, k_co, n_sites } => {
                let free = n_sites - cov[0];
                d_dc[0] = k_o * free * free;
                d_dcov[0][0] = -2.0 * k_o * c_thin[0] * free;
                d_dc[1] = k_co * free;
                d_dcov[1][0] = -k_co * c_thin[1];
            }
            RateRule::LangmuirHinshelwood {
                k_o,
                k_co,
                k_co_rev,
                k_co2,
                n_sites,
            } => {
                let free_o = n_sites - cov[0];
                d_dc[0] = k_o * free_o * free_o;
                d_dcov[0][0] = -2.0 * k_o * c_thin[0] * free_o;
                d_dc[1] = k_co * (n_sites - cov[0] - cov[1]);
                d_dcov[1][0] = -k_co * c_thin[1];
                d_dcov[1][1] = -k_co * c_thin[1] - k_co_rev;
                d_dcov[2][0] = k_co2 * cov[1];
                d_dcov[2][1] = k_co2 * cov[0];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: MechanismKind) -> MechanismSpec {
        let mut k_forward = BTreeMap::new();
        match kind {
            MechanismKind::EleyRideal | MechanismKind::LangmuirHinshelwood => {
                k_forward.insert("O2".into(), 0.2);
                k_forward.insert("CO".into(), 0.5);
                k_forward.insert("CO2".into(), 5.0);
            }
            _ => {
                k_forward.insert("A".into(), 0.2);
            }
        }
        MechanismSpec {
            kind,
            k_forward,
            k_reverse: BTreeMap::new(),
            n_sites: 1.0,
            co_delay: 0.0,
        }
    }

    #[test]
    fn validation_rejects_negative_constants() {
        let mut m = spec(MechanismKind::IrreversibleLimited);
        m.k_forward.insert("A".into(), -1.0);
        assert!(m.validate().is_err());
    }

    #[test]
    fn validation_rejects_zero_sites_for_limited() {
        let mut m = spec(MechanismKind::Reversible);
        m.n_sites = 0.0;
        assert!(m.validate().is_err());
        let mut m = spec(MechanismKind::IrreversibleAbundant);
        m.n_sites = 0.0;
        assert!(m.validate().is_ok());
    }

    #[test]
    fn lh_rates_match_written_forms() {
        let m = spec(MechanismKind::LangmuirHinshelwood);
        let kin = m.kinetics();
        let c = [1.5, 0.8, 0.1];
        let cov = [0.3, 0.2];
        let mut r = [0.0; 3];
        kin.rates(&c, &cov, &mut r);
        assert!((r[0] - 0.2 * 1.5 * 0.7 * 0.7).abs() < 1e-15);
        assert!((r[1] - 0.5 * 0.8 * 0.5).abs() < 1e-15);
        assert!((r[2] - 5.0 * 0.3 * 0.2).abs() < 1e-15);
    }

    #[test]
    fn partials_match_finite_differences() {
        for kind in [
            MechanismKind::IrreversibleAbundant,
            MechanismKind::IrreversibleLimited,
            MechanismKind::Reversible,
            MechanismKind::EleyRideal,
            MechanismKind::LangmuirHinshelwood,
        ] {
            let mut m = spec(kind);
            m.k_reverse.insert("A".into(), 0.7);
            m.k_reverse.insert("CO".into(), 0.3);
            let kin = m.kinetics();
            let nc = kin.n_channels();
            let ns = kin.n_surfaces();
            let c_thin = vec![1.2, 0.9, 0.2][..kin.n_gases().min(3)].to_vec();
            let cov: Vec<f64> = (0..ns).map(|s| 0.1 + 0.15 * s as f64).collect();
            let mut r0 = vec![0.0; nc];
            kin.rates(&c_thin, &cov, &mut r0);
            let mut d_dc = vec![0.0; nc];
            let mut d_dcov = vec![vec![0.0; ns]; nc];
            kin.rate_partials(&c_thin, &cov, &mut d_dc, &mut d_dcov);
            let h = 1e-7;
            for ch in 0..nc {
                let mut cp = c_thin.clone();
                cp[kin.channel_gas[ch]] += h;
                let mut r1 = vec![0.0; nc];
                kin.rates(&cp, &cov, &mut r1);
                let fd = (r1[ch] - r0[ch]) / h;
                assert!(
                    (fd - d_dc[ch]).abs() < 1e-5 * (1.0 + fd.abs()),
                    "{kind:?} channel {ch} dc"
                );
                for s in 0..ns {
                    let mut cv = cov.clone();
                    cv[s] += h;
                    let mut r2 = vec![0.0; nc];
                    kin.rates(&c_thin, &cv, &mut r2);
                    let fd = (r2[ch] - r0[ch]) / h;
                    assert!(
                        (fd - d_dcov[ch][s]).abs() < 1e-5 * (1.0 + fd.abs()),
                        "{kind:?} channel {ch} cov {s}"
                    );
                }
            }
        }
    }
}
