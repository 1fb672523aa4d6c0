//! Single-rotor thrust physics.
//!
//! A first-order blade-element argument (small inflow angle, linear lift,
//! no induced inflow or profile drag) integrates to the affine-inflow model
//!
//! ```text
//! T(v, ν_in) = k_T v² − k_D v ν_in
//! k_T = N ρ c a θ₀ B³ / 6,   k_D = N ρ c a B² / 4
//! ```
//!
//! where `v` is the rotor angular speed and `ν_in` the axial inflow
//! (positive inflow reduces thrust). [`bet_numeric_thrust`] integrates the
//! elemental thrust numerically and serves as the oracle for the closed form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AeroError {
    #[error("invalid rotor geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid thrust model: {0}")]
    InvalidModel(String),
    #[error("rotor speed must be non-negative, got {0}")]
    NegativeSpeed(f64),
    #[error("quadrature needs at least 2 panels, got {0}")]
    TooFewPanels(usize),
}

/// Physical blade parameters of a fixed-pitch, constant-chord propeller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotorGeometry {
    pub blade_count: u32,
    /// Blade radius `B`, m.
    pub radius: f64,
    /// Chord `c`, m.
    pub chord: f64,
    /// Constant pitch angle `θ₀`, rad.
    pub pitch_angle: f64,
    /// Lift-curve slope `a`, 1/rad.
    pub lift_slope: f64,
    /// Air density, kg/m³.
    pub air_density: f64,
}

impl RotorGeometry {
    pub fn validate(&self) -> Result<(), AeroError> {
        if self.blade_count == 0 {
            return Err(AeroError::InvalidGeometry("blade_count must be positive".into()));
        }
        let positive = [
            ("radius", self.radius),
            ("chord", self.chord),
            ("lift_slope", self.lift_slope),
            ("air_density", self.air_density),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(AeroError::InvalidGeometry(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if !(self.pitch_angle > 0.0 && self.pitch_angle < std::f64::consts::FRAC_PI_2) {
            return Err(AeroError::InvalidGeometry(format!(
                "pitch_angle must lie in (0, π/2), got {}",
                self.pitch_angle
            )));
        }
        Ok(())
    }

    /// `½ N ρ c a`, the prefactor shared by every blade element.
    fn element_prefactor(&self) -> f64 {
        0.5 * f64::from(self.blade_count) * self.air_density * self.chord * self.lift_slope
    }
}

/// The affine-inflow thrust model `T(v, ν_in) = k_T v² − k_D v ν_in`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineThrustModel {
    /// `k_T`, N·s²/rad².
    pub k_thrust: f64,
    /// `k_D`, N·s²/(rad·m).
    pub k_inflow: f64,
}

impl AffineThrustModel {
    pub fn new(k_thrust: f64, k_inflow: f64) -> Result<Self, AeroError> {
        let model = Self { k_thrust, k_inflow };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), AeroError> {
        if !(self.k_thrust.is_finite() && self.k_thrust > 0.0) {
            return Err(AeroError::InvalidModel(format!(
                "k_thrust must be positive, got {}",
                self.k_thrust
            )));
        }
        if !(self.k_inflow.is_finite() && self.k_inflow > 0.0) {
            return Err(AeroError::InvalidModel(format!(
                "k_inflow must be positive, got {}",
                self.k_inflow
            )));
        }
        Ok(())
    }

    /// Thrust at speed `v` under inflow `nu_in`. Not clamped: outside the
    /// monotone regime the value can be negative.
    pub fn thrust(&self, v: f64, nu_in: f64) -> Result<f64, AeroError> {
        check_speed(v)?;
        Ok(self.eval(v, nu_in))
    }

    /// `λ = −∂T/∂ν_in = k_D v`.
    pub fn inflow_sensitivity(&self, v: f64, _nu_in: f64) -> Result<f64, AeroError> {
        check_speed(v)?;
        Ok(self.k_inflow * v)
    }

    /// `∂λ/∂v = k_D`.
    pub fn hardening_rate(&self, _v: f64, _nu_in: f64) -> f64 {
        self.k_inflow
    }

    /// `∂T/∂v = 2 k_T v − k_D ν_in`.
    pub fn speed_sensitivity(&self, v: f64, nu_in: f64) -> f64 {
        2.0 * self.k_thrust * v - self.k_inflow * nu_in
    }

    /// Supremum of inflows for which `∂T/∂v > 0` at speed `v`.
    pub fn monotone_regime_bound(&self, v: f64) -> f64 {
        2.0 * (self.k_thrust / self.k_inflow) * v
    }

    /// Raw polynomial evaluation with no argument checks.
    pub(crate) fn eval(&self, v: f64, nu_in: f64) -> f64 {
        self.k_thrust * v * v - self.k_inflow * v * nu_in
    }
}

fn check_speed(v: f64) -> Result<(), AeroError> {
    if v >= 0.0 {
        Ok(())
    } else {
        Err(AeroError::NegativeSpeed(v))
    }
}

/// Closed-form thrust constants of a rotor geometry.
///
/// Degenerate geometries are rejected. [`derive_coefficients_unchecked`]
/// evaluates the same formulas without validation, e.g. to report the
/// `k_T = 0` limit of a flat-pitch blade.
pub fn derive_coefficients(geom: &RotorGeometry) -> Result<AffineThrustModel, AeroError> {
    geom.validate()?;
    Ok(derive_coefficients_unchecked(geom))
}

/// Evaluates the coefficient formulas without validating the geometry.
pub fn derive_coefficients_unchecked(geom: &RotorGeometry) -> AffineThrustModel {
    let n = f64::from(geom.blade_count);
    let common = n * geom.air_density * geom.chord * geom.lift_slope;
    AffineThrustModel {
        k_thrust: common * geom.pitch_angle * geom.radius.powi(3) / 6.0,
        k_inflow: common * geom.radius.powi(2) / 4.0,
    }
}

/// Thrust obtained by integrating the blade-element thrust
/// `½ N ρ c a (θ₀ v² b² − v b ν_in) db` over `b ∈ [0, B]` with composite
/// Simpson. The integrand is quadratic in `b`, so the result is exact up to
/// rounding for any panel count. Odd panel counts close with a 3/8 rule on
/// the last three panels.
pub fn bet_numeric_thrust(
    geom: &RotorGeometry,
    v: f64,
    nu_in: f64,
    panels: usize,
) -> Result<f64, AeroError> {
    geom.validate()?;
    if panels < 2 {
        return Err(AeroError::TooFewPanels(panels));
    }
    check_speed(v)?;

    let pre = geom.element_prefactor();
    let element = |b: f64| pre * (geom.pitch_angle * v * v * b * b - v * b * nu_in);
    let h = geom.radius / panels as f64;
    let node = |i: usize| element(i as f64 * h);

    let simpson_panels = if panels.is_multiple_of(2) { panels } else { panels - 3 };
    let mut total = 0.0;
    if simpson_panels > 0 {
        let mut acc = node(0) + node(simpson_panels);
        for i in 1..simpson_panels {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * node(i);
        }
        total += acc * h / 3.0;
    }
    if simpson_panels != panels {
        let i = simpson_panels;
        total += 3.0 * h / 8.0 * (node(i) + 3.0 * node(i + 1) + 3.0 * node(i + 2) + node(i + 3));
    }
    Ok(total)
}

/// Per-rotor thrust law used by the dual-rotor channels.
///
/// Implementors report the thrust, its speed and inflow derivatives, and
/// the speed derivative of the inflow sensitivity. The methods assume
/// `v > 0` and perform no argument checks.
pub trait ThrustLaw {
    fn thrust_at(&self, v: f64, nu_in: f64) -> f64;
    /// `∂T/∂v`.
    fn speed_derivative(&self, v: f64, nu_in: f64) -> f64;
    /// `λ = −∂T/∂ν_in`.
    fn inflow_derivative(&self, v: f64, nu_in: f64) -> f64;
    /// `∂λ/∂v`.
    fn hardening(&self, v: f64, nu_in: f64) -> f64;
}

impl ThrustLaw for AffineThrustModel {
    fn thrust_at(&self, v: f64, nu_in: f64) -> f64 {
        self.eval(v, nu_in)
    }
    fn speed_derivative(&self, v: f64, nu_in: f64) -> f64 {
        self.speed_sensitivity(v, nu_in)
    }
    fn inflow_derivative(&self, v: f64, _nu_in: f64) -> f64 {
        self.k_inflow * v
    }
    fn hardening(&self, _v: f64, _nu_in: f64) -> f64 {
        self.k_inflow
    }
}

/// `T = k_T v² − c ν_in`: the inflow sensitivity is the constant `c`, so the
/// aerodynamic hardening condition fails. Exists only as a counterexample for
/// checking that the damping-monotonicity properties really depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonHardeningThrust {
    pub k_thrust: f64,
    pub inflow_drag: f64,
}

impl ThrustLaw for NonHardeningThrust {
    fn thrust_at(&self, v: f64, nu_in: f64) -> f64 {
        self.k_thrust * v * v - self.inflow_drag * nu_in
    }
    fn speed_derivative(&self, v: f64, _nu_in: f64) -> f64 {
        2.0 * self.k_thrust * v
    }
    fn inflow_derivative(&self, _v: f64, _nu_in: f64) -> f64 {
        self.inflow_drag
    }
    fn hardening(&self, _v: f64, _nu_in: f64) -> f64 {
        0.0
    }
}
