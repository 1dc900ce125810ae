//! Run configuration files (TOML) mirroring the reactor and mechanism
//! parameters.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use tapkin::reactor::{MechanismKind, MechanismSpec, ReactorConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfigFile {
    #[serde(default)]
    pub reactor: ReactorSection,
    pub mechanism: Option<MechanismSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ReactorSection {
    pub length: f64,
    pub porosity: f64,
    pub diffusivity: f64,
    pub pulse_moles: f64,
    pub t_end: f64,
    pub dt_out: f64,
    pub n_cells: usize,
    /// Defaults to the center cell when omitted.
    pub catalyst_cell: Option<usize>,
}

impl Default for ReactorSection {
    fn default() -> Self {
        let c = tapkin::reactor::presets::normalized_config();
        ReactorSection {
            length: c.length,
            porosity: c.porosity,
            diffusivity: c.diffusivity,
            pulse_moles: c.pulse_moles,
            t_end: c.t_end,
            dt_out: c.dt_out,
            n_cells: c.n_cells,
            catalyst_cell: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MechanismSection {
    /// one of: irreversible-abundant, irreversible-limited, reversible,
    /// eley-rideal, langmuir-hinshelwood
    pub kind: String,
    #[serde(default)]
    pub k_forward: BTreeMap<String, f64>,
    #[serde(default)]
    pub k_reverse: BTreeMap<String, f64>,
    #[serde(default = "one")]
    pub n_sites: f64,
    #[serde(default)]
    pub co_delay: f64,
}

fn one() -> f64 {
    1.0
}

impl ReactorSection {
    pub fn to_config(&self) -> ReactorConfig {
        ReactorConfig {
            length: self.length,
            porosity: self.porosity,
            diffusivity: self.diffusivity,
            pulse_moles: self.pulse_moles,
            t_end: self.t_end,
            dt_out: self.dt_out,
            n_cells: self.n_cells,
            catalyst_cell: self.catalyst_cell.unwrap_or(self.n_cells / 2),
        }
    }
}

impl MechanismSection {
    pub fn to_spec(&self) -> Result<MechanismSpec> {
        let kind = match self.kind.as_str() {
            "irreversible-abundant" => MechanismKind::IrreversibleAbundant,
            "irreversible-limited" => MechanismKind::IrreversibleLimited,
            "reversible" => MechanismKind::Reversible,
            "eley-rideal" => MechanismKind::EleyRideal,
            "langmuir-hinshelwood" => MechanismKind::LangmuirHinshelwood,
            other => bail!("unknown mechanism kind '{other}'"),
        };
        Ok(MechanismSpec {
            kind,
            k_forward: self.k_forward.clone(),
            k_reverse: self.k_reverse.clone(),
            n_sites: self.n_sites,
            co_delay: self.co_delay,
        })
    }
}

pub fn load_config(path: &Path) -> Result<RunConfigFile> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("cannot parse config {}", path.display()))
}

/// One-line echoes of the effective configuration for output headers.
pub fn echo_config(config: &ReactorConfig, mech: Option<&MechanismSpec>, seed: u64) -> Vec<String> {
    let mut lines = vec![
        format!("tool = tapkin {}", env!("CARGO_PKG_VERSION")),
        format!(
            "reactor: length = {}, porosity = {}, diffusivity = {}, pulse_moles = {}, t_end = {}, dt_out = {}, n_cells = {}, catalyst_cell = {}",
            config.length,
            config.porosity,
            config.diffusivity,
            config.pulse_moles,
            config.t_end,
            config.dt_out,
            config.n_cells,
            config.catalyst_cell
        ),
        format!("seed = {seed}"),
    ];
    if let Some(m) = mech {
        let fwd: Vec<String> = m
            .k_forward
            .iter()
            .map(|(g, k)| format!("{g}={k}"))
            .collect();
        let rev: Vec<String> = m
            .k_reverse
            .iter()
            .map(|(g, k)| format!("{g}={k}"))
            .collect();
        lines.push(format!(
            "mechanism: kind = {:?}, k_forward = [{}], k_reverse = [{}], n_sites = {}, co_delay = {}",
            m.kind,
            fwd.join(", "),
            rev.join(", "),
            m.n_sites,
            m.co_delay
        ));
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let text = r#"
[reactor]
t_end = 2.0

[mechanism]
kind = "reversible"
n_sites = 1.0
[mechanism.k_forward]
A = 0.2
[mechanism.k_reverse]
A = 40.0
"#;
        let parsed: RunConfigFile = toml::from_str(text).unwrap();
        assert_eq!(parsed.reactor.t_end, 2.0);
        assert_eq!(parsed.reactor.n_cells, 200);
        let mech = parsed.mechanism.unwrap().to_spec().unwrap();
        assert_eq!(mech.kind, MechanismKind::Reversible);
        assert_eq!(mech.k_reverse["A"], 40.0);
    }

    #[test]
    fn rejects_unknown_kind() {
        let section = MechanismSection {
            kind: "mystery".into(),
            k_forward: BTreeMap::new(),
            k_reverse: BTreeMap::new(),
            n_sites: 1.0,
            co_delay: 0.0,
        };
        assert!(section.to_spec().is_err());
    }
}
