//! Run configuration file.
//!
//! A single TOML document per run: an optional `scenario`, exactly one model
//! section under `[model.*]`, and the parameter sections the scenario needs.
//!
//! ```toml
//! scenario = "allocate"
//!
//! [model.affine]
//! k_thrust = 1.0
//! k_inflow = 1.0
//!
//! [trim]
//! nu_bar = 0.0
//! force = 3.0
//!
//! [allocation]
//! sigma_des = 4.0
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aero::{derive_coefficients, AffineThrustModel, RotorGeometry};
use crate::antagonistic::OpenInterval;
use crate::dual_rotor::{wind_trim, DualRotor, TrimPoint};
use crate::impedance::{BodyConfig, InputSchedule, ScheduleSegment};
use crate::vsa::VsaConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config is missing section [{0}]")]
    MissingSection(&'static str),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    DeriveCoeffs,
    FiberSweep,
    Allocate,
    Simulate,
    Verify,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::DeriveCoeffs => "derive-coeffs",
            Scenario::FiberSweep => "fiber-sweep",
            Scenario::Allocate => "allocate",
            Scenario::Simulate => "simulate",
            Scenario::Verify => "verify",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Scenario::DeriveCoeffs, Scenario::FiberSweep, Scenario::Allocate, Scenario::Simulate, Scenario::Verify]
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown scenario {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub model: ModelSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trim: Option<TrimSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocation: Option<AllocationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySection>,
}

/// Exactly one of `[model.geometry]`, `[model.affine]`, `[model.vsa]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSection {
    /// Identical rotors from blade geometry.
    Geometry(GeometryModel),
    /// Thrust constants given directly; `bwd` makes the pair asymmetric.
    Affine(AffineModel),
    Vsa(VsaConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryModel {
    pub blade_count: u32,
    pub radius: f64,
    pub chord: f64,
    pub pitch_angle: f64,
    pub lift_slope: f64,
    pub air_density: f64,
    /// Open speed interval `[lower, upper]` applied to both rotors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_box: Option<[f64; 2]>,
}

impl GeometryModel {
    pub fn geometry(&self) -> RotorGeometry {
        RotorGeometry {
            blade_count: self.blade_count,
            radius: self.radius,
            chord: self.chord,
            pitch_angle: self.pitch_angle,
            lift_slope: self.lift_slope,
            air_density: self.air_density,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineModel {
    pub k_thrust: f64,
    pub k_inflow: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bwd: Option<AffineThrustModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_box: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrimSection {
    /// Air-relative trim speed. If absent it is `body_speed − wind_speed`
    /// when those are given, else 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_bar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_speed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wind_speed: Option<f64>,
    #[serde(default)]
    pub force: f64,
}

impl TrimSection {
    pub fn nu_bar(&self) -> f64 {
        match (self.nu_bar, self.body_speed, self.wind_speed) {
            (Some(nu), _, _) => nu,
            (None, None, None) => 0.0,
            (None, body, wind) => wind_trim(body.unwrap_or(0.0), wind.unwrap_or(0.0)),
        }
    }

    pub fn trim_point(&self) -> TrimPoint {
        TrimPoint { nu_bar: self.nu_bar(), force_level: self.force }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationSection {
    pub sigma_des: f64,
}

/// Fiber sweep. The start point is either `start` directly, or `u1_start`
/// with `u2` solved so the start lies on `level` (defaulting to the trim
/// force).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u1_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    pub u1_end: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub mass: f64,
    #[serde(default)]
    pub nu0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub segments: Vec<ScheduleSegment>,
}

impl SimulationSection {
    pub fn schedule(&self) -> InputSchedule {
        InputSchedule { segments: self.segments.clone() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Random draws per property.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draws: Option<usize>,
    /// Swap the rotor thrust law for one whose inflow sensitivity does not
    /// grow with speed, to confirm the damping properties detect it.
    #[serde(default)]
    pub inject_non_hardening: bool,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Re-checks model invariants. A geometry with zero pitch is allowed
    /// through (it is the `k_T = 0` limit reported by `derive-coeffs`).
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn fmt::Display| ConfigError::Invalid(e.to_string());
        match &self.model {
            ModelSection::Geometry(g) => {
                let mut geom = g.geometry();
                if geom.pitch_angle == 0.0 {
                    geom.pitch_angle = 0.1;
                }
                geom.validate().map_err(|e| invalid(&e))?;
                speed_box(g.speed_box)?;
            }
            ModelSection::Affine(_) => {
                self.dual_rotor()?;
            }
            ModelSection::Vsa(v) => v.validate().map_err(|e| invalid(&e))?,
        }
        if let Some(sim) = &self.simulation {
            InputSchedule { segments: sim.segments.clone() }.validate().map_err(|e| invalid(&e))?;
            if !(sim.mass > 0.0) {
                return Err(ConfigError::Invalid(format!("mass must be positive, got {}", sim.mass)));
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    /// The dual rotor described by a geometry or affine model section.
    pub fn dual_rotor(&self) -> Result<DualRotor, ConfigError> {
        let invalid = |e: &dyn fmt::Display| ConfigError::Invalid(e.to_string());
        let (fwd, bwd, bounds) = match &self.model {
            ModelSection::Geometry(g) => {
                let model = derive_coefficients(&g.geometry()).map_err(|e| invalid(&e))?;
                (model, model, g.speed_box)
            }
            ModelSection::Affine(a) => {
                let fwd = AffineThrustModel::new(a.k_thrust, a.k_inflow).map_err(|e| invalid(&e))?;
                (fwd, a.bwd.unwrap_or(fwd), a.speed_box)
            }
            ModelSection::Vsa(_) => {
                return Err(ConfigError::Invalid("scenario needs a rotor model, found [model.vsa]".into()))
            }
        };
        let interval = speed_box(bounds)?;
        DualRotor::new(fwd, bwd, [interval; 2]).map_err(|e| invalid(&e))
    }

    pub fn body(&self) -> Result<BodyConfig, ConfigError> {
        let sim = self.simulation.as_ref().ok_or(ConfigError::MissingSection("simulation"))?;
        BodyConfig::new(sim.mass, self.dual_rotor()?).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn trim(&self) -> TrimSection {
        self.trim.clone().unwrap_or(TrimSection { nu_bar: None, body_speed: None, wind_speed: None, force: 0.0 })
    }
}

pub const DEFAULT_SEED: u64 = 0x5EED_2026;

fn speed_box(bounds: Option<[f64; 2]>) -> Result<OpenInterval, ConfigError> {
    match bounds {
        None => Ok(OpenInterval::POSITIVE),
        Some([lo, hi]) => OpenInterval::new(lo, hi)
            .ok_or_else(|| ConfigError::Invalid(format!("speed_box [{lo}, {hi}] must satisfy 0 <= lower < upper"))),
    }
}
