//! Translational dynamics of a body carried by the dual rotor.
//!
//! In still air `m ν̇ = F(v, ν) + F_ext`. With affine rotors this is the
//! linear impedance `m ν̇ + c_app (ν − ν_eq) = F_ext`: the common mode
//! `v₁ + v₂` sets the damping `c_app`, the differential mode `v₁ − v₂` sets
//! the equilibrium velocity `ν_eq`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antagonistic::CommandPair;
use crate::dual_rotor::{DualRotor, VadaError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Rotor(#[from] VadaError),
    #[error("body mass must be positive, got {0}")]
    InvalidMass(f64),
    #[error("invalid integration step: {0}")]
    InvalidStep(String),
    #[error("input schedule gap: {0}")]
    ScheduleGap(String),
    #[error("at t = {t}: rotor speeds ({}, {}) leave the speed box", .speeds[0], .speeds[1])]
    SpeedsOutOfBox { t: f64, speeds: CommandPair },
    #[error("at t = {t}: state became non-finite")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyConfig {
    pub mass: f64,
    pub dual_rotor: DualRotor,
}

impl BodyConfig {
    pub fn new(mass: f64, dual_rotor: DualRotor) -> Result<Self, DynamicsError> {
        let body = Self { mass, dual_rotor };
        body.validate()?;
        Ok(body)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(DynamicsError::InvalidMass(self.mass));
        }
        self.dual_rotor.validate()?;
        Ok(())
    }

    /// `c_app(v) = σ_a(v; 0)`, i.e. `k_D (v₁ + v₂)` for identical rotors.
    pub fn apparent_damping(&self, v: CommandPair) -> Result<f64, DynamicsError> {
        Ok(self.dual_rotor.damping_at_trim(v, 0.0)?)
    }

    /// `F_act(v) = F(v, 0)`, i.e. `k_T (v₁² − v₂²)` for identical rotors.
    pub fn active_force(&self, v: CommandPair) -> Result<f64, DynamicsError> {
        Ok(self.dual_rotor.net_force(v, 0.0)?)
    }

    /// Air-relative velocity at which the net force vanishes.
    pub fn equilibrium_velocity(&self, v: CommandPair) -> Result<f64, DynamicsError> {
        let dr = &self.dual_rotor;
        if dr.is_symmetric() {
            dr.net_force(v, 0.0)?;
            let m = dr.rotor_fwd;
            return Ok(m.k_thrust / m.k_inflow * (v[0] - v[1]));
        }
        Ok(self.active_force(v)? / self.apparent_damping(v)?)
    }

    /// Closed-form solution for constant rotor speeds and external force:
    /// `ν(t) = ν_∞ + (ν₀ − ν_∞) e^{−c_app t / m}`, `ν_∞ = ν_eq + F_ext / c_app`.
    pub fn analytic_response(
        &self,
        v: CommandPair,
        nu0: f64,
        external_force: f64,
        t: f64,
    ) -> Result<f64, DynamicsError> {
        self.validate()?;
        let c_app = self.apparent_damping(v)?;
        let nu_inf = self.equilibrium_velocity(v)? + external_force / c_app;
        Ok(nu_inf + (nu0 - nu_inf) * (-c_app * t / self.mass).exp())
    }

    /// `m / c_app`.
    pub fn time_constant(&self, v: CommandPair) -> Result<f64, DynamicsError> {
        Ok(self.mass / self.apparent_damping(v)?)
    }

    fn acceleration(&self, v: CommandPair, nu: f64, external_force: f64) -> f64 {
        (self.dual_rotor.raw_force(v, nu) + external_force) / self.mass
    }

    /// Fixed-step classical RK4 from `ν(0) = nu0` to `t_end`.
    ///
    /// Samples lie on the grid `k·dt` (the last one at `t_end`). A step that
    /// crosses a schedule breakpoint is split there, so inputs are constant
    /// within every RK4 stage.
    pub fn simulate(
        &self,
        schedule: &InputSchedule,
        nu0: f64,
        t_end: f64,
        dt: f64,
    ) -> Result<Trajectory, DynamicsError> {
        self.validate()?;
        schedule.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(DynamicsError::InvalidStep(format!("dt must be positive, got {dt}")));
        }
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(DynamicsError::InvalidStep(format!("t_end must be positive, got {t_end}")));
        }
        if !nu0.is_finite() {
            return Err(DynamicsError::NonFinite { t: 0.0 });
        }
        for seg in &schedule.segments {
            if seg.start < t_end && !self.dual_rotor.contains(seg.speeds) {
                return Err(DynamicsError::SpeedsOutOfBox { t: seg.start, speeds: seg.speeds });
            }
        }

        let ratio = t_end / dt;
        let steps = if (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0) {
            ratio.round() as usize
        } else {
            ratio.ceil() as usize
        };

        let mut samples = Vec::with_capacity(steps + 1);
        let mut nu = nu0;
        samples.push(self.sample(schedule, 0.0, nu));
        let mut t = 0.0;
        for k in 1..=steps {
            let t_next = if k == steps { t_end } else { k as f64 * dt };
            let mut a = t;
            for b in schedule.breakpoints_in(t, t_next).chain(std::iter::once(t_next)) {
                let seg = schedule.segment_at(a);
                nu = rk4_step(|x| self.acceleration(seg.speeds, x, seg.external_force), nu, b - a);
                a = b;
            }
            if !nu.is_finite() {
                return Err(DynamicsError::NonFinite { t: t_next });
            }
            t = t_next;
            samples.push(self.sample(schedule, t, nu));
        }
        Ok(Trajectory { samples, dt, integrator: Integrator::Rk4 })
    }

    fn sample(&self, schedule: &InputSchedule, t: f64, nu: f64) -> Sample {
        let seg = schedule.segment_at(t);
        Sample {
            t,
            nu,
            v1: seg.speeds[0],
            v2: seg.speeds[1],
            force: self.dual_rotor.raw_force(seg.speeds, nu),
            external_force: seg.external_force,
        }
    }
}

fn rk4_step(f: impl Fn(f64) -> f64, y: f64, h: f64) -> f64 {
    let k1 = f(y);
    let k2 = f(y + 0.5 * h * k1);
    let k3 = f(y + 0.5 * h * k2);
    let k4 = f(y + h * k3);
    y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Common mode `v₁ + v₂` and differential mode `v₁ − v₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Modes {
    pub common: f64,
    pub differential: f64,
}

impl Modes {
    pub fn speeds(&self) -> CommandPair {
        [(self.common + self.differential) / 2.0, (self.common - self.differential) / 2.0]
    }
}

pub fn mode_decomposition(v: CommandPair) -> Modes {
    Modes { common: v[0] + v[1], differential: v[0] - v[1] }
}

/// Inputs held from `start` until the next segment begins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSegment {
    pub start: f64,
    pub speeds: CommandPair,
    #[serde(default)]
    pub external_force: f64,
}

/// Piecewise-constant rotor speeds and external force. The first segment
/// starts at `t = 0`; segment starts are the breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSchedule {
    pub segments: Vec<ScheduleSegment>,
}

impl InputSchedule {
    pub fn constant(speeds: CommandPair, external_force: f64) -> Self {
        Self { segments: vec![ScheduleSegment { start: 0.0, speeds, external_force }] }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let first = self
            .segments
            .first()
            .ok_or_else(|| DynamicsError::ScheduleGap("schedule has no segments".into()))?;
        if first.start != 0.0 {
            return Err(DynamicsError::ScheduleGap(format!(
                "first segment starts at {} instead of 0",
                first.start
            )));
        }
        for w in self.segments.windows(2) {
            if !(w[1].start > w[0].start) || !w[1].start.is_finite() {
                return Err(DynamicsError::ScheduleGap(format!(
                    "breakpoints not strictly increasing at {}",
                    w[1].start
                )));
            }
        }
        for seg in &self.segments {
            if !(seg.speeds.iter().all(|s| s.is_finite()) && seg.external_force.is_finite()) {
                return Err(DynamicsError::ScheduleGap(format!("non-finite input at {}", seg.start)));
            }
        }
        Ok(())
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().skip(1).map(|s| s.start)
    }

    fn breakpoints_in(&self, a: f64, b: f64) -> impl Iterator<Item = f64> + '_ {
        self.breakpoints().filter(move |&t| t > a && t < b)
    }

    /// Segment in force at `t` (right-continuous at breakpoints).
    pub fn segment_at(&self, t: f64) -> &ScheduleSegment {
        let idx = self.segments.partition_point(|s| s.start <= t);
        &self.segments[idx.saturating_sub(1)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub nu: f64,
    pub v1: f64,
    pub v2: f64,
    #[serde(rename = "F")]
    pub force: f64,
    #[serde(rename = "F_ext")]
    pub external_force: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub dt: f64,
    pub integrator: Integrator,
}

impl Trajectory {
    pub fn final_velocity(&self) -> f64 {
        self.samples.last().map_or(f64::NAN, |s| s.nu)
    }
}
