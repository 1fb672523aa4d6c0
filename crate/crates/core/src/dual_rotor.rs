//! Antagonistic dual-rotor actuator with variable aerodynamic damping.
//!
//! Two coaxial rotors push in opposite directions. With air-relative
//! velocity `ν` the forward rotor sees inflow `+ν` and the backward rotor
//! `−ν`, so the net force is `F(v, ν) = T₁(v₁, ν) − T₂(v₂, −ν)`. At a trim
//! `ν̄` the incremental damping `σ_a = −∂F/∂ν = λ₁(v₁, ν̄) + λ₂(v₂, −ν̄)`
//! plays the role of the tendon VSA's stiffness, and co-contraction along a
//! constant-force fiber raises it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aero::{AeroError, AffineThrustModel, ThrustLaw};
use crate::antagonistic::{AntagonisticActuator, ChannelLaw, CommandPair, OpenInterval};

/// Relative tolerance on force and damping for an allocation to count as met.
pub const ALLOCATION_TOLERANCE: f64 = 1e-9;

pub const MAX_ALLOCATION_ITERATIONS: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VadaError {
    #[error(transparent)]
    Model(#[from] AeroError),
    #[error("invalid speed box: {0}")]
    InvalidBox(String),
    #[error("rotor speeds ({}, {}) lie outside the speed box", .0[0], .0[1])]
    OutOfBox(CommandPair),
    #[error(
        "trim inflow {inflow} leaves the monotone-thrust regime of rotor {rotor} \
         at speed {speed} (dT/dv = {sensitivity})"
    )]
    RegimeViolation { rotor: usize, inflow: f64, speed: f64, sensitivity: f64 },
    #[error("invalid allocation request: {0}")]
    InvalidRequest(String),
    #[error("allocation Newton iteration did not converge (residuals {force_residual:e}, {damping_residual:e})")]
    NewtonDivergence { force_residual: f64, damping_residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualRotor {
    /// Pushes forward, sees inflow `+ν`.
    pub rotor_fwd: AffineThrustModel,
    /// Pushes backward, sees inflow `−ν`.
    pub rotor_bwd: AffineThrustModel,
    pub speed_box: [OpenInterval; 2],
}

/// Trim airspeed and commanded net force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrimPoint {
    pub nu_bar: f64,
    pub force_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub speeds: CommandPair,
    pub achieved_force: f64,
    pub achieved_damping: f64,
    pub feasible: bool,
    /// Why the candidate was rejected, when infeasible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infeasibility: Option<String>,
}

impl DualRotor {
    pub fn new(
        rotor_fwd: AffineThrustModel,
        rotor_bwd: AffineThrustModel,
        speed_box: [OpenInterval; 2],
    ) -> Result<Self, VadaError> {
        let dr = Self { rotor_fwd, rotor_bwd, speed_box };
        dr.validate()?;
        Ok(dr)
    }

    /// Two identical rotors with the speed box `(0, ∞)`.
    pub fn symmetric(model: AffineThrustModel) -> Result<Self, VadaError> {
        Self::new(model, model, [OpenInterval::POSITIVE; 2])
    }

    pub fn validate(&self) -> Result<(), VadaError> {
        self.rotor_fwd.validate()?;
        self.rotor_bwd.validate()?;
        for b in &self.speed_box {
            if !(b.lower >= 0.0 && b.upper > b.lower) || b.lower.is_nan() {
                return Err(VadaError::InvalidBox(format!("{b:?}")));
            }
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        self.rotor_fwd == self.rotor_bwd
    }

    pub fn contains(&self, v: CommandPair) -> bool {
        self.speed_box[0].contains(v[0]) && self.speed_box[1].contains(v[1])
    }

    fn check(&self, v: CommandPair) -> Result<(), VadaError> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(VadaError::OutOfBox(v))
        }
    }

    pub fn net_force(&self, v: CommandPair, nu: f64) -> Result<f64, VadaError> {
        self.check(v)?;
        Ok(self.raw_force(v, nu))
    }

    /// `σ_a(v; ν̄) = λ₁(v₁, ν̄) + λ₂(v₂, −ν̄)`.
    pub fn damping_at_trim(&self, v: CommandPair, nu_bar: f64) -> Result<f64, VadaError> {
        self.check(v)?;
        Ok(self.raw_damping(v, nu_bar))
    }

    /// Norm of `∇_v F(v, ν̄)`.
    pub fn force_promptness(&self, v: CommandPair, nu_bar: f64) -> Result<f64, VadaError> {
        self.check(v)?;
        let g1 = self.rotor_fwd.speed_sensitivity(v[0], nu_bar);
        let g2 = self.rotor_bwd.speed_sensitivity(v[1], -nu_bar);
        Ok(g1.hypot(g2))
    }

    /// The force map at trim `ν̄` as a generic antagonistic actuator over
    /// rotor speeds. Fails if `∂T/∂v` is negative anywhere in the box for
    /// either rotor at its trim inflow.
    pub fn as_antagonistic_at_trim(
        &self,
        nu_bar: f64,
    ) -> Result<AntagonisticActuator<RotorChannel<AffineThrustModel>, RotorChannel<AffineThrustModel>>, VadaError>
    {
        self.validate()?;
        // ∂T/∂v grows with v, so the box's lower edge is the worst case.
        let rotors = [(self.rotor_fwd, nu_bar), (self.rotor_bwd, -nu_bar)];
        for (index, (model, inflow)) in rotors.iter().enumerate() {
            let speed = self.speed_box[index].lower;
            let sensitivity = model.speed_sensitivity(speed, *inflow);
            if sensitivity < 0.0 {
                return Err(VadaError::RegimeViolation { rotor: index, inflow: *inflow, speed, sensitivity });
            }
        }
        Ok(rotor_actuator(self.rotor_fwd, self.rotor_bwd, self.speed_box, nu_bar))
    }

    /// Rotor speeds that produce `trim.force_level` with incremental damping
    /// `sigma_des` at `trim.nu_bar`.
    ///
    /// Identical rotors use the common/differential-mode closed form;
    /// otherwise a 2-D Newton iteration is seeded from the closed form of the
    /// averaged rotor. A candidate outside the speed box (or with `|d| ≥ s`)
    /// is returned with `feasible = false` rather than clamped.
    pub fn allocate(&self, trim: TrimPoint, sigma_des: f64) -> Result<AllocationResult, VadaError> {
        self.validate()?;
        check_request(trim, sigma_des)?;
        if self.is_symmetric() {
            let (candidate, reason) = closed_form_allocation(&self.rotor_fwd, trim, sigma_des);
            return Ok(self.finish(candidate, trim.nu_bar, reason));
        }
        let mean = AffineThrustModel {
            k_thrust: 0.5 * (self.rotor_fwd.k_thrust + self.rotor_bwd.k_thrust),
            k_inflow: 0.5 * (self.rotor_fwd.k_inflow + self.rotor_bwd.k_inflow),
        };
        let (seed, _) = closed_form_allocation(&mean, trim, sigma_des);
        self.allocate_newton(trim, sigma_des, seed)
    }

    /// Newton iteration on `(F(v, ν̄) − F̄, σ_a(v; ν̄) − σ_des)` from `seed`.
    pub fn allocate_newton(
        &self,
        trim: TrimPoint,
        sigma_des: f64,
        seed: CommandPair,
    ) -> Result<AllocationResult, VadaError> {
        check_request(trim, sigma_des)?;
        let nu = trim.nu_bar;
        let force_tol = ALLOCATION_TOLERANCE * trim.force_level.abs().max(1.0);
        let damping_tol = ALLOCATION_TOLERANCE * sigma_des.max(1.0);

        let mut v = seed;
        let met = |r: (f64, f64), scale: f64| r.0 <= force_tol * scale && r.1 <= damping_tol * scale;
        for _ in 0..MAX_ALLOCATION_ITERATIONS {
            let rf = self.raw_force(v, nu) - trim.force_level;
            let rd = self.raw_damping(v, nu) - sigma_des;
            let residuals = (rf.abs(), rd.abs());
            // Keep polishing well past the contract tolerance; Newton is
            // quadratic here so this costs a step or two.
            if met(residuals, 1e-4) || !(rf.is_finite() && rd.is_finite()) {
                break;
            }
            // J = [[∂T₁/∂v, −∂T₂/∂v], [∂λ₁/∂v, ∂λ₂/∂v]]
            let a1 = self.rotor_fwd.speed_sensitivity(v[0], nu);
            let a2 = -self.rotor_bwd.speed_sensitivity(v[1], -nu);
            let b1 = self.rotor_fwd.hardening_rate(v[0], nu);
            let b2 = self.rotor_bwd.hardening_rate(v[1], -nu);
            let det = a1 * b2 - a2 * b1;
            if det == 0.0 || !det.is_finite() {
                break;
            }
            let next = [v[0] - (rf * b2 - a2 * rd) / det, v[1] - (a1 * rd - b1 * rf) / det];
            let next_res = (
                (self.raw_force(next, nu) - trim.force_level).abs(),
                (self.raw_damping(next, nu) - sigma_des).abs(),
            );
            // Rounding floor reached.
            if met(residuals, 1.0) && next_res.0 + next_res.1 >= residuals.0 + residuals.1 {
                break;
            }
            v = next;
        }
        let residuals = (
            (self.raw_force(v, nu) - trim.force_level).abs(),
            (self.raw_damping(v, nu) - sigma_des).abs(),
        );
        if met(residuals, 1.0) {
            let reason = (v[0] <= 0.0 || v[1] <= 0.0).then(|| "non-positive rotor speed".to_string());
            return Ok(self.finish(v, nu, reason));
        }
        Err(VadaError::NewtonDivergence { force_residual: residuals.0, damping_residual: residuals.1 })
    }

    fn finish(&self, speeds: CommandPair, nu_bar: f64, reason: Option<String>) -> AllocationResult {
        let reason = reason.or_else(|| (!self.contains(speeds)).then(|| "outside the speed box".to_string()));
        AllocationResult {
            speeds,
            achieved_force: self.raw_force(speeds, nu_bar),
            achieved_damping: self.raw_damping(speeds, nu_bar),
            feasible: reason.is_none(),
            infeasibility: reason,
        }
    }

    pub(crate) fn raw_force(&self, v: CommandPair, nu: f64) -> f64 {
        self.rotor_fwd.eval(v[0], nu) - self.rotor_bwd.eval(v[1], -nu)
    }

    pub(crate) fn raw_damping(&self, v: CommandPair, _nu_bar: f64) -> f64 {
        // λ = k_D v does not depend on the inflow.
        self.rotor_fwd.k_inflow * v[0] + self.rotor_bwd.k_inflow * v[1]
    }
}

fn check_request(trim: TrimPoint, sigma_des: f64) -> Result<(), VadaError> {
    if !(sigma_des.is_finite() && sigma_des > 0.0) {
        return Err(VadaError::InvalidRequest(format!("damping target must be positive, got {sigma_des}")));
    }
    if !(trim.nu_bar.is_finite() && trim.force_level.is_finite()) {
        return Err(VadaError::InvalidRequest(format!("non-finite trim {trim:?}")));
    }
    Ok(())
}

/// Closed-form inverse for two identical affine rotors:
/// `s = σ/k_D`, `d = (F̄/s + k_D ν̄)/k_T`, `v = ((s+d)/2, (s−d)/2)`.
fn closed_form_allocation(
    model: &AffineThrustModel,
    trim: TrimPoint,
    sigma_des: f64,
) -> (CommandPair, Option<String>) {
    let s = sigma_des / model.k_inflow;
    let d = (trim.force_level / s + model.k_inflow * trim.nu_bar) / model.k_thrust;
    let speeds = [(s + d) / 2.0, (s - d) / 2.0];
    let reason = (d.abs() >= s).then(|| {
        format!("differential mode |d| = {} is not below common mode s = {s}", d.abs())
    });
    (speeds, reason)
}

/// Air-relative trim speed under steady wind along the axis.
pub fn wind_trim(body_speed: f64, wind_speed: f64) -> f64 {
    body_speed - wind_speed
}

/// A rotor held at a fixed inflow, seen as an antagonistic channel:
/// `h = T(v, ν_in)`, `g = ∂T/∂v`, `p = λ`, `dp = ∂λ/∂v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorChannel<L> {
    pub law: L,
    pub inflow: f64,
}

impl<L: ThrustLaw> ChannelLaw for RotorChannel<L> {
    fn output(&self, u: f64) -> f64 {
        self.law.thrust_at(u, self.inflow)
    }
    fn sensitivity(&self, u: f64) -> f64 {
        self.law.speed_derivative(u, self.inflow)
    }
    fn passive(&self, u: f64) -> f64 {
        self.law.inflow_derivative(u, self.inflow)
    }
    fn passive_hardening(&self, u: f64) -> f64 {
        self.law.hardening(u, self.inflow)
    }
}

/// Builds the trim actuator for arbitrary thrust laws, with no regime check.
pub fn rotor_actuator<L: ThrustLaw>(
    fwd: L,
    bwd: L,
    speed_box: [OpenInterval; 2],
    nu_bar: f64,
) -> AntagonisticActuator<RotorChannel<L>, RotorChannel<L>> {
    AntagonisticActuator::new(
        RotorChannel { law: fwd, inflow: nu_bar },
        RotorChannel { law: bwd, inflow: -nu_bar },
        speed_box,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::antagonistic::SweepQuantity;

    fn unit() -> DualRotor {
        DualRotor::symmetric(AffineThrustModel::new(1.0, 1.0).unwrap()).unwrap()
    }

    fn asymmetric() -> DualRotor {
        DualRotor::new(
            AffineThrustModel::new(1.2, 0.8).unwrap(),
            AffineThrustModel::new(0.9, 1.1).unwrap(),
            [OpenInterval::new(0.5, 50.0).unwrap(); 2],
        )
        .unwrap()
    }

    #[test]
    fn net_force_examples() {
        let dr = unit();
        assert_eq!(dr.net_force([1.3, 1.3], 0.0).unwrap(), 0.0);
        assert_eq!(dr.net_force([2.0, 1.0], 0.0).unwrap(), 3.0);
        assert_eq!(dr.net_force([2.0, 1.0], 0.5).unwrap(), 1.5);
        assert!(matches!(dr.net_force([0.0, 1.0], 0.0), Err(VadaError::OutOfBox(_))));
    }

    #[test]
    fn damping_examples() {
        let dr = unit();
        assert_eq!(dr.damping_at_trim([2.0, 3.0], 0.0).unwrap(), 5.0);
        assert_eq!(dr.damping_at_trim([2.0, 3.0], -4.0).unwrap(), 5.0);
        let k = AffineThrustModel::new(0.3, 0.45).unwrap();
        let sym = DualRotor::symmetric(k).unwrap();
        assert!((sym.damping_at_trim([1.7, 1.7], 0.0).unwrap() - 2.0 * 0.45 * 1.7).abs() < 1e-15);
        assert_eq!(sym.damping_at_trim([2.0, 1.0], 0.0), sym.damping_at_trim([2.0, 1.0], 7.0));
    }

    #[test]
    fn damping_matches_finite_difference() {
        let dr = asymmetric();
        let h = 1e-5;
        for &(v, nu) in &[([3.0, 2.0], 0.0), ([4.0, 7.5], 1.3), ([10.0, 2.0], -2.0)] {
            let fd = -(dr.net_force(v, nu + h).unwrap() - dr.net_force(v, nu - h).unwrap()) / (2.0 * h);
            let exact = dr.damping_at_trim(v, nu).unwrap();
            assert!((fd - exact).abs() / exact <= 1e-6);
        }
    }

    #[test]
    fn promptness_examples() {
        let dr = DualRotor::symmetric(AffineThrustModel::new(1.0, 0.37).unwrap()).unwrap();
        assert!((dr.force_promptness([3.0, 4.0], 0.0).unwrap() - 10.0).abs() < 1e-14);
        let c = 2.5;
        assert!((dr.force_promptness([c, c], 0.0).unwrap() - 2.0 * c * 2f64.sqrt()).abs() < 1e-14);
        let act = asymmetric().as_antagonistic_at_trim(0.4).unwrap();
        let v = [3.0, 5.0];
        let direct = asymmetric().force_promptness(v, 0.4).unwrap();
        assert!((act.promptness(v).unwrap() - direct).abs() <= 1e-12);
    }

    #[test]
    fn trim_actuator_matches_dual_rotor() {
        let dr = asymmetric();
        for nu in [0.0, 0.6, -0.6] {
            let act = dr.as_antagonistic_at_trim(nu).unwrap();
            let v = [2.2, 3.1];
            assert!((act.task_output(v).unwrap() - dr.net_force(v, nu).unwrap()).abs() <= 1e-12);
            assert!(
                (act.passive_coefficient(v).unwrap() - dr.damping_at_trim(v, nu).unwrap()).abs() <= 1e-12
            );
            let ratio = dr.rotor_fwd.speed_sensitivity(v[0], nu) / dr.rotor_bwd.speed_sensitivity(v[1], -nu);
            assert!((act.fiber_tangent(v).unwrap() - ratio).abs() <= 1e-12);
        }
    }

    #[test]
    fn trim_outside_regime_is_rejected() {
        // With a zero lower speed bound any nonzero trim makes one rotor's
        // dT/dv negative near the bound.
        // A positive trim is inflow against the forward rotor.
        assert!(matches!(unit().as_antagonistic_at_trim(0.1), Err(VadaError::RegimeViolation { rotor: 0, .. })));
        assert!(matches!(unit().as_antagonistic_at_trim(-0.1), Err(VadaError::RegimeViolation { rotor: 1, .. })));
        assert!(unit().as_antagonistic_at_trim(0.0).is_ok());
        // Bounds at v = 0.5: forward 2·(1.2/0.8)·0.5 = 1.5, backward 2·(0.9/1.1)·0.5 ≈ 0.818.
        assert!(asymmetric().as_antagonistic_at_trim(1.4).is_ok());
        assert!(asymmetric().as_antagonistic_at_trim(1.6).is_err());
        assert!(asymmetric().as_antagonistic_at_trim(-0.8).is_ok());
        assert!(asymmetric().as_antagonistic_at_trim(-0.85).is_err());
    }

    #[test]
    fn co_contraction_raises_damping_at_trim() {
        let dr = asymmetric();
        for nu in [0.0, 0.3, -0.3] {
            let act = dr.as_antagonistic_at_trim(nu).unwrap();
            let path = act.trace_fiber([2.0, 1.5], 8.0, 60).unwrap();
            assert!(act.monotonicity_sweep(&path, SweepQuantity::Passive).unwrap().is_strictly_increasing);
        }
    }

    #[test]
    fn allocation_closed_form_example() {
        let r = unit().allocate(TrimPoint { nu_bar: 0.0, force_level: 3.0 }, 4.0).unwrap();
        assert!(r.feasible);
        assert_eq!(r.speeds, [2.375, 1.625]);
        assert!((r.achieved_force - 3.0).abs() <= 1e-12);
        assert_eq!(r.achieved_damping, 4.0);
    }

    #[test]
    fn zero_force_allocation_is_balanced() {
        let dr = DualRotor::symmetric(AffineThrustModel::new(0.7, 0.2).unwrap()).unwrap();
        let r = dr.allocate(TrimPoint { nu_bar: 0.0, force_level: 0.0 }, 3.0).unwrap();
        assert_eq!(r.speeds[0], r.speeds[1]);
        assert!((r.speeds[0] - 3.0 / 0.4).abs() < 1e-12);
    }

    #[test]
    fn infeasible_request_is_reported_not_clamped() {
        let r = unit().allocate(TrimPoint { nu_bar: 0.0, force_level: 5.0 }, 2.0).unwrap();
        assert!(!r.feasible);
        // d = 2.5, s = 2
        assert_eq!(r.speeds, [2.25, -0.25]);
        assert!(r.infeasibility.is_some());
        assert!(matches!(
            unit().allocate(TrimPoint { nu_bar: 0.0, force_level: 1.0 }, 0.0),
            Err(VadaError::InvalidRequest(_))
        ));
    }

    #[test]
    fn newton_reaches_closed_form_from_elsewhere() {
        let dr = DualRotor::symmetric(AffineThrustModel::new(0.8, 0.5).unwrap()).unwrap();
        let trim = TrimPoint { nu_bar: 0.7, force_level: 2.0 };
        let closed = dr.allocate(trim, 5.0).unwrap();
        let newton = dr.allocate_newton(trim, 5.0, [9.0, 1.0]).unwrap();
        for i in 0..2 {
            assert!((closed.speeds[i] - newton.speeds[i]).abs() <= 1e-9);
        }
    }

    #[test]
    fn asymmetric_allocation_round_trips() {
        let dr = asymmetric();
        let trim = TrimPoint { nu_bar: 0.4, force_level: 6.0 };
        let r = dr.allocate(trim, 9.0).unwrap();
        assert!(r.feasible);
        assert!((dr.net_force(r.speeds, 0.4).unwrap() - 6.0).abs() <= 6e-9);
        assert!((dr.damping_at_trim(r.speeds, 0.4).unwrap() - 9.0).abs() <= 9e-9);
    }

    #[test]
    fn wind_trim_examples() {
        assert_eq!(wind_trim(0.0, 0.0), 0.0);
        assert_eq!(wind_trim(5.0, 2.0), 3.0);
        assert_eq!(wind_trim(2.0, 5.0), -3.0);
    }
}
