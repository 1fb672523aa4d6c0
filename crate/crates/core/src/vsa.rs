//! Antagonistic tendon VSA.
//!
//! Two tendons with a nonlinear elastic law `r(x)` act on a pulley of radius
//! `R`. At joint deflection `θ` the net torque is
//! `τ = R (r(x₁ − Rθ) − r(x₂ + Rθ))`; stiffness and promptness are taken at
//! `θ = 0`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antagonistic::{AntagonisticActuator, ChannelLaw, OpenInterval};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VsaError {
    #[error("invalid tendon law: {0}")]
    InvalidLaw(String),
    #[error("pulley radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("tendon state ({0}, {1}) is not strictly positive")]
    InadmissibleState(f64, f64),
    #[error("deflection {theta} rad stretches a tendon to a nonpositive length ({x1}, {x2})")]
    InadmissibleDeflection { theta: f64, x1: f64, x2: f64 },
}

/// Elastic law of a single tendon, hardening on `x > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TendonLaw {
    /// `r = ½ k x²`
    Quadratic { k: f64 },
    /// `r = k (e^{αx} − 1)`
    Exponential { k: f64, alpha: f64 },
    /// `r = k (x + x³/3)`
    Cubic { k: f64 },
}

impl TendonLaw {
    pub fn validate(&self) -> Result<(), VsaError> {
        let ok = match *self {
            TendonLaw::Quadratic { k } | TendonLaw::Cubic { k } => k.is_finite() && k > 0.0,
            TendonLaw::Exponential { k, alpha } => {
                k.is_finite() && k > 0.0 && alpha.is_finite() && alpha > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(VsaError::InvalidLaw(format!("{self:?}: parameters must be positive")))
        }
    }

    pub fn force(&self, x: f64) -> f64 {
        match *self {
            TendonLaw::Quadratic { k } => 0.5 * k * x * x,
            TendonLaw::Exponential { k, alpha } => k * (alpha * x).exp_m1(),
            TendonLaw::Cubic { k } => k * (x + x * x * x / 3.0),
        }
    }

    /// `r′(x)`
    pub fn slope(&self, x: f64) -> f64 {
        match *self {
            TendonLaw::Quadratic { k } => k * x,
            TendonLaw::Exponential { k, alpha } => k * alpha * (alpha * x).exp(),
            TendonLaw::Cubic { k } => k * (1.0 + x * x),
        }
    }

    /// `r″(x)`
    pub fn curvature(&self, x: f64) -> f64 {
        match *self {
            TendonLaw::Quadratic { k } => k,
            TendonLaw::Exponential { k, alpha } => k * alpha * alpha * (alpha * x).exp(),
            TendonLaw::Cubic { k } => 2.0 * k * x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VsaConfig {
    pub law: TendonLaw,
    pub pulley_radius: f64,
    /// Tendon displacements `(x₁, x₂)`, m.
    pub state: [f64; 2],
}

impl VsaConfig {
    pub fn new(law: TendonLaw, pulley_radius: f64, state: [f64; 2]) -> Result<Self, VsaError> {
        let cfg = Self { law, pulley_radius, state };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), VsaError> {
        self.law.validate()?;
        if !(self.pulley_radius.is_finite() && self.pulley_radius > 0.0) {
            return Err(VsaError::InvalidRadius(self.pulley_radius));
        }
        let [x1, x2] = self.state;
        if !(x1 > 0.0 && x2 > 0.0 && x1.is_finite() && x2.is_finite()) {
            return Err(VsaError::InadmissibleState(x1, x2));
        }
        Ok(())
    }

    pub fn with_state(&self, state: [f64; 2]) -> Self {
        Self { state, ..*self }
    }

    pub fn joint_torque(&self, theta: f64) -> Result<f64, VsaError> {
        self.validate()?;
        let r = self.pulley_radius;
        let x1 = self.state[0] - r * theta;
        let x2 = self.state[1] + r * theta;
        if !(x1 > 0.0 && x2 > 0.0) {
            return Err(VsaError::InadmissibleDeflection { theta, x1, x2 });
        }
        Ok(r * (self.law.force(x1) - self.law.force(x2)))
    }

    /// `σ = −∂τ/∂θ |_{θ=0} = R² (r′(x₁) + r′(x₂))`
    pub fn stiffness(&self) -> Result<f64, VsaError> {
        self.validate()?;
        let [x1, x2] = self.state;
        Ok(self.pulley_radius.powi(2) * (self.law.slope(x1) + self.law.slope(x2)))
    }

    /// `ρ = R √(r′(x₁)² + r′(x₂)²)`
    pub fn torque_promptness(&self) -> Result<f64, VsaError> {
        self.validate()?;
        let [x1, x2] = self.state;
        Ok(self.pulley_radius * self.law.slope(x1).hypot(self.law.slope(x2)))
    }

    /// The VSA at `θ = 0` as a generic antagonistic actuator over tendon
    /// displacements.
    pub fn as_antagonistic(&self) -> AntagonisticActuator<TendonChannel, TendonChannel> {
        let channel = TendonChannel { law: self.law, pulley_radius: self.pulley_radius };
        AntagonisticActuator::new(channel, channel, [OpenInterval::POSITIVE; 2])
    }
}

/// One tendon seen through the pulley: `h = R r`, `g = R r′`, `p = R² r′`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TendonChannel {
    pub law: TendonLaw,
    pub pulley_radius: f64,
}

impl ChannelLaw for TendonChannel {
    fn output(&self, u: f64) -> f64 {
        self.pulley_radius * self.law.force(u)
    }
    fn sensitivity(&self, u: f64) -> f64 {
        self.pulley_radius * self.law.slope(u)
    }
    fn passive(&self, u: f64) -> f64 {
        self.pulley_radius.powi(2) * self.law.slope(u)
    }
    fn passive_hardening(&self, u: f64) -> f64 {
        self.pulley_radius.powi(2) * self.law.curvature(u)
    }
}
