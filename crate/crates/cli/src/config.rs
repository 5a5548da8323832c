//! JSON run configurations.
//!
//! Densities are given as `ρ_# ā³`, box sides as multiples of `ā` and momenta
//! in units of `1/ā`, where `ā` is the largest of the three scattering lengths.
//! Lengths themselves may be in any unit; only their ratios matter.

use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use bosemix::boxsum::LatticeKind;
use bosemix::mixture::MixtureParams;
use bosemix::potentials::{make_potential, AssumptionConstants, PotentialDescriptor};
use bosemix::scattering::{solve_scattering, GridConfig};
use bosemix::Error;
use serde::de::DeserializeOwned;
use serde::Deserialize;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    parse_json(&text).with_context(|| format!("in config {}", path.display()))
}

pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterConfig {
    pub potential: PotentialDescriptor,
    #[serde(default)]
    pub grid: Option<GridConfig>,
}

impl ScatterConfig {
    /// Accepts either `{"potential": ..., "grid": ...}` or a bare potential descriptor.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let probe: serde_json::Value = parse_json(&text).with_context(|| format!("in config {}", path.display()))?;
        if probe.get("potential").is_some() {
            parse_json(&text).with_context(|| format!("in config {}", path.display()))
        } else {
            let potential = parse_json(&text).with_context(|| format!("in config {}", path.display()))?;
            Ok(Self { potential, grid: None })
        }
    }
}

/// Either explicit scattering lengths or three potentials (A, B, AB) to solve.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct Interactions {
    #[serde(default)]
    pub lengths: Option<[f64; 3]>,
    #[serde(default)]
    pub potentials: Option<[PotentialDescriptor; 3]>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
}

/// Interactions resolved to a coupling template at zero density.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub template: MixtureParams,
    pub a_bar: f64,
}

impl Resolved {
    /// Mixture at dimensionless densities `ρ_# ā³`.
    pub fn at(&self, rho_a3: f64, rho_b3: f64) -> MixtureParams {
        let v = self.a_bar.powi(3);
        self.template.with_densities(rho_a3 / v, rho_b3 / v)
    }

    /// Lengths in units of `ā`.
    pub fn scaled_lengths(&self) -> [f64; 3] {
        let t = &self.template;
        [t.a_a / self.a_bar, t.a_b / self.a_bar, t.a_ab / self.a_bar]
    }

    /// Energy densities carry `ā⁻⁵`.
    pub fn energy_density(&self, e: f64) -> f64 {
        e * self.a_bar.powi(5)
    }
}

impl Interactions {
    pub fn resolve(&self) -> Result<Resolved> {
        let template = match (&self.lengths, &self.potentials) {
            (Some(_), Some(_)) => bail!(Error::Validation("give either \"lengths\" or \"potentials\", not both".into())),
            (None, None) => bail!(Error::Validation("missing \"lengths\" or \"potentials\"".into())),
            (Some([a, b, ab]), None) => MixtureParams::constant(0.0, 0.0, *a, *b, *ab)?,
            (None, Some(descs)) => {
                let grid = self.grid.unwrap_or_default();
                let mut sols = Vec::with_capacity(3);
                for (name, d) in ["A", "B", "AB"].iter().zip(descs) {
                    let v = make_potential(d).with_context(|| format!("potential of channel {name}"))?;
                    sols.push(Arc::new(solve_scattering(&v, &grid).with_context(|| format!("scattering problem of channel {name}"))?));
                }
                MixtureParams::from_solutions(0.0, 0.0, [sols[0].clone(), sols[1].clone(), sols[2].clone()])?
            }
        };
        let a_bar = template.a_bar();
        if !(a_bar > 0.0) {
            bail!(Error::Validation("at least one scattering length must be positive".into()));
        }
        Ok(Resolved { template, a_bar })
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct EnergyConfig {
    pub rho_a: f64,
    pub rho_b: f64,
    #[serde(flatten)]
    pub interactions: Interactions,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanKind {
    #[default]
    Phase,
    Convexity,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ScanConfig {
    #[serde(default)]
    pub kind: ScanKind,
    /// Phase scan: the table covers every pair `(rho_a[i], rho_b[j])`.
    #[serde(default)]
    pub rho_a: Vec<f64>,
    #[serde(default)]
    pub rho_b: Vec<f64>,
    /// Convexity scan: total `ρā³`.
    #[serde(default)]
    pub rho_a3: Option<f64>,
    /// Convexity scan: box side in units of `ā`.
    #[serde(default = "default_side")]
    pub side: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "yes")]
    pub convexifier: bool,
    #[serde(flatten)]
    pub interactions: Interactions,
}

fn default_side() -> f64 {
    1000.0
}

fn default_points() -> usize {
    50
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
pub struct BoxsumConfig {
    pub rho_a: f64,
    pub rho_b: f64,
    #[serde(default = "periodic")]
    pub lattice: LatticeKind,
    /// Box sides in units of `ā`.
    pub sides: Vec<f64>,
    #[serde(flatten)]
    pub interactions: Interactions,
}

fn periodic() -> LatticeKind {
    LatticeKind::Periodic
}

#[derive(Debug, Clone, Deserialize)]
pub struct MinimizeConfig {
    pub rho_a: f64,
    pub rho_b: f64,
    /// Momenta in units of `1/ā`.
    pub k: Vec<f64>,
    #[serde(default)]
    pub restarts: Option<usize>,
    #[serde(flatten)]
    pub interactions: Interactions,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    pub potentials: [PotentialDescriptor; 3],
    pub constants: AssumptionConstants,
    /// Total `ρā³`.
    pub rho_a3: f64,
    /// Softness exponent in `δ ≤ a (ρā³)^σ`.
    pub sigma: f64,
    #[serde(default)]
    pub grid: Option<GridConfig>,
}
