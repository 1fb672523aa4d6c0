//! Generic two-channel antagonistic actuator with a scalar task.
//!
//! Both the tendon VSA and the dual-rotor actuator reduce to the same
//! structure: a task map `f(u) = h₁(u₁) − h₂(u₂)`, a passive coefficient
//! `p₁(u₁) + p₂(u₂)` (stiffness or damping), and the promptness `‖∇f‖`.
//! Constant-output fibers are level sets of `f`; moving along them with both
//! commands increasing is co-contraction.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute residual allowed on a fiber, relative to `max(1, |level|)`.
pub const FIBER_TOLERANCE: f64 = 1e-10;

/// Newton iteration cap for the fiber corrector.
pub const MAX_NEWTON_ITERATIONS: usize = 50;

pub type CommandPair = [f64; 2];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("command pair ({}, {}) lies outside the admissible box", .0[0], .0[1])]
    OutOfBox(CommandPair),
    #[error("minus-channel sensitivity {sensitivity} is not positive at u2 = {u2}")]
    ZeroSensitivity { u2: f64, sensitivity: f64 },
    #[error("fiber left the admissible box at step {step}: ({}, {})", .point[0], .point[1])]
    LeftAdmissibleBox { step: usize, point: CommandPair },
    #[error("fiber corrector did not converge at step {step} (residual {residual:e})")]
    NewtonDivergence { step: usize, residual: f64 },
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("path needs at least two distinct points")]
    DegeneratePath,
}

/// One channel of an antagonistic pair.
///
/// For the theory to apply on the admissible range, `sensitivity`, `passive`
/// and `passive_hardening` must all be strictly positive. Laws carry their
/// derivatives analytically.
pub trait ChannelLaw {
    /// Contribution `h(u)` to the task output.
    fn output(&self, u: f64) -> f64;
    /// `g(u) = dh/du`.
    fn sensitivity(&self, u: f64) -> f64;
    /// Contribution `p(u)` to the passive coefficient.
    fn passive(&self, u: f64) -> f64;
    /// `dp/du`.
    fn passive_hardening(&self, u: f64) -> f64;
}

macro_rules! forward_channel_law {
    ($($ptr:ty),*) => {$(
        impl<T: ChannelLaw + ?Sized> ChannelLaw for $ptr {
            fn output(&self, u: f64) -> f64 { (**self).output(u) }
            fn sensitivity(&self, u: f64) -> f64 { (**self).sensitivity(u) }
            fn passive(&self, u: f64) -> f64 { (**self).passive(u) }
            fn passive_hardening(&self, u: f64) -> f64 { (**self).passive_hardening(u) }
        }
    )*};
}
forward_channel_law!(&T, Box<T>, Arc<T>);

/// Open interval `(lower, upper)`; `upper` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpenInterval {
    pub lower: f64,
    pub upper: f64,
}

impl OpenInterval {
    pub const POSITIVE: OpenInterval = OpenInterval { lower: 0.0, upper: f64::INFINITY };

    pub fn new(lower: f64, upper: f64) -> Option<Self> {
        (lower >= 0.0 && upper > lower).then_some(Self { lower, upper })
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lower && x < self.upper
    }
}

impl Default for OpenInterval {
    fn default() -> Self {
        Self::POSITIVE
    }
}

#[derive(Debug, Clone)]
pub struct AntagonisticActuator<P, M> {
    /// Contributes `+h₁(u₁)`.
    pub channel_plus: P,
    /// Contributes `−h₂(u₂)`.
    pub channel_minus: M,
    pub admissible_box: [OpenInterval; 2],
}

impl<P: ChannelLaw, M: ChannelLaw> AntagonisticActuator<P, M> {
    pub fn new(channel_plus: P, channel_minus: M, admissible_box: [OpenInterval; 2]) -> Self {
        Self { channel_plus, channel_minus, admissible_box }
    }

    pub fn contains(&self, u: CommandPair) -> bool {
        self.admissible_box[0].contains(u[0]) && self.admissible_box[1].contains(u[1])
    }

    fn check(&self, u: CommandPair) -> Result<(), CoreError> {
        if self.contains(u) {
            Ok(())
        } else {
            Err(CoreError::OutOfBox(u))
        }
    }

    pub fn task_output(&self, u: CommandPair) -> Result<f64, CoreError> {
        self.check(u)?;
        Ok(self.raw_output(u))
    }

    pub fn passive_coefficient(&self, u: CommandPair) -> Result<f64, CoreError> {
        self.check(u)?;
        Ok(self.channel_plus.passive(u[0]) + self.channel_minus.passive(u[1]))
    }

    /// Euclidean norm of the task-map gradient.
    pub fn promptness(&self, u: CommandPair) -> Result<f64, CoreError> {
        self.check(u)?;
        let g1 = self.channel_plus.sensitivity(u[0]);
        let g2 = self.channel_minus.sensitivity(u[1]);
        Ok(g1.hypot(g2))
    }

    /// Slope `du₂/du₁ = g₁(u₁)/g₂(u₂)` of the fiber through `u`.
    pub fn fiber_tangent(&self, u: CommandPair) -> Result<f64, CoreError> {
        self.check(u)?;
        let g2 = self.minus_sensitivity(u[1])?;
        Ok(self.channel_plus.sensitivity(u[0]) / g2)
    }

    fn raw_output(&self, u: CommandPair) -> f64 {
        self.channel_plus.output(u[0]) - self.channel_minus.output(u[1])
    }

    fn minus_sensitivity(&self, u2: f64) -> Result<f64, CoreError> {
        let g2 = self.channel_minus.sensitivity(u2);
        if g2 > 0.0 {
            Ok(g2)
        } else {
            Err(CoreError::ZeroSensitivity { u2, sensitivity: g2 })
        }
    }

    /// Newton solve for the `u₂` putting `(u1, u₂)` on the fiber at `level`,
    /// starting from `guess`. Returns `(u₂, residual)`; `step` only labels
    /// errors.
    pub fn solve_on_level(
        &self,
        u1: f64,
        level: f64,
        guess: f64,
        step: usize,
    ) -> Result<(f64, f64), CoreError> {
        let tol = FIBER_TOLERANCE * level.abs().max(1.0);
        let h1 = self.channel_plus.output(u1);
        let mut u2 = guess;
        let mut residual = f64::INFINITY;
        for _ in 0..=MAX_NEWTON_ITERATIONS {
            let r = h1 - self.channel_minus.output(u2) - level;
            residual = r.abs();
            if residual <= tol {
                // One more step usually lands at rounding level; keep it only
                // if it actually helps.
                if let Ok(g) = self.minus_sensitivity(u2) {
                    let polished = u2 + r / g;
                    let polished_residual = (h1 - self.channel_minus.output(polished) - level).abs();
                    if polished_residual < residual && self.admissible_box[1].contains(polished) {
                        return Ok((polished, polished_residual));
                    }
                }
                return Ok((u2, residual));
            }
            if !r.is_finite() {
                break;
            }
            u2 += r / self.minus_sensitivity(u2)?;
        }
        Err(CoreError::NewtonDivergence { step, residual })
    }

    /// Traces the fiber through `start` at `steps` equally spaced `u₁`
    /// values up to `u1_end`, with an Euler predictor along the fiber
    /// tangent and a Newton corrector on `u₂`. The returned path holds
    /// `steps + 1` points including `start`.
    pub fn trace_fiber(
        &self,
        start: CommandPair,
        u1_end: f64,
        steps: usize,
    ) -> Result<FiberPath, CoreError> {
        self.check(start)?;
        let level = self.raw_output(start);
        if !level.is_finite() {
            return Err(CoreError::InvalidSweep(format!("task output at start is {level}")));
        }
        if steps > 0 && !(u1_end > start[0]) {
            return Err(CoreError::InvalidSweep(format!(
                "u1_end ({u1_end}) must exceed the starting u1 ({})",
                start[0]
            )));
        }

        let mut points = Vec::with_capacity(steps + 1);
        let mut residuals = Vec::with_capacity(steps + 1);
        points.push(start);
        residuals.push(0.0);

        let span = u1_end - start[0];
        let mut prev = start;
        for k in 1..=steps {
            let u1 = if k == steps { u1_end } else { start[0] + span * k as f64 / steps as f64 };
            if !self.admissible_box[0].contains(u1) {
                return Err(CoreError::LeftAdmissibleBox { step: k, point: [u1, prev[1]] });
            }
            let slope = self.channel_plus.sensitivity(prev[0]) / self.minus_sensitivity(prev[1])?;
            let mut guess = prev[1] + slope * (u1 - prev[0]);
            if !self.admissible_box[1].contains(guess) {
                guess = prev[1];
            }
            let (u2, _) = self.solve_on_level(u1, level, guess, k)?;
            let point = [u1, u2];
            if !self.contains(point) {
                return Err(CoreError::LeftAdmissibleBox { step: k, point });
            }
            residuals.push((self.raw_output(point) - level).abs());
            points.push(point);
            prev = point;
        }
        Ok(FiberPath { level, points, residuals })
    }

    /// Evaluates `which` along `path` and checks for strict increase between
    /// adjacent points. No tolerance is applied: a tie counts as a failure.
    pub fn monotonicity_sweep(
        &self,
        path: &FiberPath,
        which: SweepQuantity,
    ) -> Result<MonotonicityReport, CoreError> {
        let values = path
            .points
            .iter()
            .map(|&u| match which {
                SweepQuantity::Passive => self.passive_coefficient(u),
                SweepQuantity::Promptness => self.promptness(u),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MonotonicityReport::from_values(values))
    }

    /// Pairs `(passive coefficient, promptness)` along `path` and checks
    /// that promptness is a strictly increasing function of the passive
    /// coefficient, independent of the traversal order.
    pub fn passive_promptness_relation(
        &self,
        path: &FiberPath,
    ) -> Result<PassivePromptnessRelation, CoreError> {
        let first = path.points.first().ok_or(CoreError::DegeneratePath)?;
        if path.points.iter().all(|p| p == first) {
            return Err(CoreError::DegeneratePath);
        }
        let pairs = path
            .points
            .iter()
            .map(|&u| Ok((self.passive_coefficient(u)?, self.promptness(u)?)))
            .collect::<Result<Vec<_>, CoreError>>()?;

        let mut sorted = pairs.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let is_monotone = sorted.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1);
        Ok(PassivePromptnessRelation { pairs, is_monotone })
    }

    /// Samples `n` points per channel across the box (finite part) and lists
    /// every point where a sign condition on the channel laws fails.
    pub fn check_channel_invariants(&self, n: usize) -> Vec<InvariantViolation> {
        let mut out = Vec::new();
        let channels: [(&dyn ChannelLaw, OpenInterval); 2] = [
            (&self.channel_plus, self.admissible_box[0]),
            (&self.channel_minus, self.admissible_box[1]),
        ];
        for (index, (law, range)) in channels.into_iter().enumerate() {
            let upper = if range.upper.is_finite() { range.upper } else { range.lower + 10.0 };
            for i in 1..=n {
                let u = range.lower + (upper - range.lower) * i as f64 / (n + 1) as f64;
                let checks = [
                    ("sensitivity", law.sensitivity(u)),
                    ("passive", law.passive(u)),
                    ("passive_hardening", law.passive_hardening(u)),
                ];
                for (quantity, value) in checks {
                    if !(value > 0.0) {
                        out.push(InvariantViolation { channel: index, u, quantity, value });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantViolation {
    /// 0 for the plus channel, 1 for the minus channel.
    pub channel: usize,
    pub u: f64,
    pub quantity: &'static str,
    pub value: f64,
}

/// Points on a constant-output fiber, ordered by `u₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberPath {
    pub level: f64,
    pub points: Vec<CommandPair>,
    /// `|f(u) − level|` per point.
    pub residuals: Vec<f64>,
}

impl FiberPath {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Same points in the opposite order.
    pub fn reversed(&self) -> FiberPath {
        let mut out = self.clone();
        out.points.reverse();
        out.residuals.reverse();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepQuantity {
    Passive,
    Promptness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub values: Vec<f64>,
    pub is_strictly_increasing: bool,
    /// Smallest adjacent increment; absent for paths with fewer than two points.
    pub min_increment: Option<f64>,
}

impl MonotonicityReport {
    pub fn from_values(values: Vec<f64>) -> Self {
        let min_increment = values.windows(2).map(|w| w[1] - w[0]).reduce(f64::min);
        let is_strictly_increasing = values.windows(2).all(|w| w[1] - w[0] > 0.0);
        Self { values, is_strictly_increasing, min_increment }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassivePromptnessRelation {
    /// `(passive coefficient, promptness)` in path order.
    pub pairs: Vec<(f64, f64)>,
    pub is_monotone: bool,
}
