//! Canonical reactor configurations and mechanism presets used across the
//! test suite and the command-line interface.

use std::collections::BTreeMap;

use super::mechanism::{MechanismKind, MechanismSpec};
use super::ReactorConfig;

/// Unit-normalized reactor: L = 1 m, porosity 0.5, D = 1 m^2/s, 1 mol pulse,
/// 3 s span sampled every millisecond. Without reaction the outlet flux is
/// the standard diffusion curve.
pub fn normalized_config() -> ReactorConfig {
    ReactorConfig {
        length: 1.0,
        porosity: 0.5,
        diffusivity: 1.0,
        pulse_moles: 1.0,
        t_end: 3.0,
        dt_out: 1e-3,
        n_cells: 200,
        catalyst_cell: 100,
    }
}

fn single_gas(kind: MechanismKind, k: f64, n_sites: f64, k_rev: f64) -> MechanismSpec {
    let mut k_forward = BTreeMap::new();
    k_forward.insert("A".to_string(), k);
    let mut k_reverse = BTreeMap::new();
    if k_rev > 0.0 {
        k_reverse.insert("A".to_string(), k_rev);
    }
    MechanismSpec {
        kind,
        k_forward,
        k_reverse,
        n_sites,
        co_delay: 0.0,
    }
}

/// No reaction at all: the pulse diffuses through untouched.
pub fn inert() -> MechanismSpec {
    single_gas(MechanismKind::IrreversibleAbundant, 0.0, 1.0, 0.0)
}

/// Irreversible adsorption with abundant sites, apparent constant 0.2 m/s.
/// True reactivities: beta_C = 0.2, all other terms zero.
pub fn adsorption_abundant() -> MechanismSpec {
    single_gas(MechanismKind::IrreversibleAbundant, 0.2, 1.0, 0.0)
}

/// Irreversible adsorption, k+ = 0.2 m^2/mol/s on N = 1 mol/m of sites.
/// True reactivities: beta_C = 0.2, beta_CU = -0.2.
pub fn adsorption_limited() -> MechanismSpec {
    single_gas(MechanismKind::IrreversibleLimited, 0.2, 1.0, 0.0)
}

/// Irreversible adsorption with the same apparent constant (N k+ = 0.2) but
/// a stronger intrinsic step: k+ = 0.5 m^2/mol/s, N = 0.4 mol/m.
/// True reactivities: beta_C = 0.2, beta_CU = -0.5.
pub fn adsorption_limited_strong() -> MechanismSpec {
    single_gas(MechanismKind::IrreversibleLimited, 0.5, 0.4, 0.0)
}

/// Reversible adsorption, k+ = 0.2 m^2/mol/s, N = 1 mol/m, k- = 40 m/s.
/// True reactivities: beta_C = 0.2, beta_CU = -0.2, beta_U = -40.
pub fn adsorption_reversible() -> MechanismSpec {
    single_gas(MechanismKind::Reversible, 0.2, 1.0, 40.0)
}

/// Irreversible Eley-Rideal CO oxidation: dissociative O2 uptake, gas-phase
/// CO strips adsorbed oxygen.
pub fn eley_rideal(k_o: f64, k_co: f64) -> MechanismSpec {
    let mut k_forward = BTreeMap::new();
    k_forward.insert("O2".to_string(), k_o);
    k_forward.insert("CO".to_string(), k_co);
    MechanismSpec {
        kind: MechanismKind::EleyRideal,
        k_forward,
        k_reverse: BTreeMap::new(),
        n_sites: 1.0,
        co_delay: 0.0,
    }
}

/// Langmuir-Hinshelwood CO oxidation with adsorbed-pair combination at
/// `k_co2` (5.0 m^2/mol/s in the canonical sweeps) and optional CO
/// reversibility.
pub fn langmuir_hinshelwood(k_o: f64, k_co: f64, k_co2: f64, k_co_rev: f64) -> MechanismSpec {
    let mut k_forward = BTreeMap::new();
    k_forward.insert("O2".to_string(), k_o);
    k_forward.insert("CO".to_string(), k_co);
    k_forward.insert("CO2".to_string(), k_co2);
    let mut k_reverse = BTreeMap::new();
    if k_co_rev > 0.0 {
        k_reverse.insert("CO".to_string(), k_co_rev);
    }
    MechanismSpec {
        kind: MechanismKind::LangmuirHinshelwood,
        k_forward,
        k_reverse,
        n_sites: 1.0,
        co_delay: 0.0,
    }
}

/// Langmuir-Hinshelwood in the fast-conversion limit: adsorbed CO reacts
/// away on contact, so the CO coverage is identically zero and the
/// rate-concentration quotient of CO is an exact linear function of the
/// square-rooted oxygen quotient with zero intercept. This is the regime in
/// which the mechanism-line coefficients are recovered to machine precision.
/// Requires `k_co < 2 k_o * n_sites`, otherwise oxygen stripping outpaces
/// dissociative supply and the limit is inconsistent.
pub fn langmuir_hinshelwood_fast_co2(k_o: f64, k_co: f64) -> MechanismSpec {
    langmuir_hinshelwood(k_o, k_co, f64::INFINITY, 0.0)
}

/// Named presets exposed on the command line.
pub fn by_name(name: &str) -> Option<(ReactorConfig, MechanismSpec)> {
    let config = normalized_config();
    let mech = match name {
        "inert" => inert(),
        "ads-abundant" => adsorption_abundant(),
        "ads-limited" => adsorption_limited(),
        "ads-limited-strong" => adsorption_limited_strong(),
        "ads-reversible" => adsorption_reversible(),
        "er-irrev" => eley_rideal(0.2, 0.5),
        "lh-irrev" => langmuir_hinshelwood(0.2, 0.5, 5.0, 0.0),
        "lh-line" => langmuir_hinshelwood_fast_co2(0.5, 0.1),
        _ => return None,
    };
    Some((config, mech))
}

pub const PRESET_NAMES: &[&str] = &[
    "inert",
    "ads-abundant",
    "ads-limited",
    "ads-limited-strong",
    "ads-reversible",
    "er-irrev",
    "lh-irrev",
    "lh-line",
];
