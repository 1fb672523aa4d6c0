//! Scenario runners behind the `vada` command line.
//!
//! Each runner takes a validated [`RunConfig`] and returns a serializable
//! record; the binary decides where records and series are written.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aero::{bet_numeric_thrust, derive_coefficients, derive_coefficients_unchecked};
use crate::antagonistic::{AntagonisticActuator, ChannelLaw, CoreError, MonotonicityReport};
use crate::config::{ConfigError, ModelSection, RunConfig};
use crate::dual_rotor::{AllocationResult, VadaError};
use crate::impedance::{mode_decomposition, DynamicsError, Sample, Trajectory};

/// Speed and inflow (as a fraction of the monotone bound) at which
/// `derive-coeffs` compares quadrature with the closed form.
pub const DERIVE_SAMPLE_SPEED: f64 = 500.0;
pub const DERIVE_SAMPLE_INFLOW_FRACTION: f64 = 0.25;
pub const DERIVE_SAMPLE_PANELS: usize = 8;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("fiber trace failed: {0}")]
    Fiber(#[from] CoreError),
    #[error(transparent)]
    Rotor(#[from] VadaError),
    #[error("simulation failed: {0}")]
    Simulation(#[from] DynamicsError),
    #[error("output error: {0}")]
    Output(String),
}

impl RunError {
    /// 2 for usage and configuration problems, 1 for domain failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Output(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeriveCoeffsRecord {
    pub k_thrust: f64,
    pub k_inflow: f64,
    pub sample_speed: f64,
    pub sample_inflow: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form_thrust: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_thrust: Option<f64>,
    /// `|quadrature − closed form| / max(1, |closed form|)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_residual: Option<f64>,
    pub warnings: Vec<String>,
}

pub fn run_derive_coeffs(cfg: &RunConfig) -> Result<DeriveCoeffsRecord, RunError> {
    let ModelSection::Geometry(g) = &cfg.model else {
        return Err(ConfigError::MissingSection("model.geometry").into());
    };
    let geom = g.geometry();
    let v = DERIVE_SAMPLE_SPEED;

    if geom.pitch_angle == 0.0 {
        let model = derive_coefficients_unchecked(&geom);
        return Ok(DeriveCoeffsRecord {
            k_thrust: model.k_thrust,
            k_inflow: model.k_inflow,
            sample_speed: v,
            sample_inflow: 0.0,
            closed_form_thrust: None,
            quadrature_thrust: None,
            quadrature_residual: None,
            warnings: vec![
                "pitch_angle = 0 gives k_thrust = 0: thrust is never increasing in speed, \
                 the monotone-thrust regime is empty"
                    .into(),
            ],
        });
    }

    let model = derive_coefficients(&geom).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let nu = DERIVE_SAMPLE_INFLOW_FRACTION * model.monotone_regime_bound(v);
    let closed = model.thrust(v, nu).map_err(VadaError::from)?;
    let numeric = bet_numeric_thrust(&geom, v, nu, DERIVE_SAMPLE_PANELS).map_err(VadaError::from)?;
    Ok(DeriveCoeffsRecord {
        k_thrust: model.k_thrust,
        k_inflow: model.k_inflow,
        sample_speed: v,
        sample_inflow: nu,
        closed_form_thrust: Some(closed),
        quadrature_thrust: Some(numeric),
        quadrature_residual: Some((numeric - closed).abs() / closed.abs().max(1.0)),
        warnings: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberRow {
    pub u1: f64,
    pub u2: f64,
    pub task_residual: f64,
    pub passive_coeff: f64,
    pub promptness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Fewer than two points: nothing to compare.
    Vacuous,
}

impl Verdict {
    fn of(report: &MonotonicityReport) -> Self {
        match (report.values.len(), report.is_strictly_increasing) {
            (0 | 1, _) => Verdict::Vacuous,
            (_, true) => Verdict::Pass,
            (_, false) => Verdict::Fail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberSweepOutput {
    pub model: String,
    pub level: f64,
    pub nu_bar: Option<f64>,
    pub max_residual: f64,
    pub passive_verdict: Verdict,
    pub promptness_verdict: Verdict,
    pub passive_min_increment: Option<f64>,
    pub promptness_min_increment: Option<f64>,
    #[serde(skip)]
    pub rows: Vec<FiberRow>,
}

impl FiberSweepOutput {
    pub fn passed(&self) -> bool {
        self.passive_verdict != Verdict::Fail && self.promptness_verdict != Verdict::Fail
    }

    pub fn verdict_line(&self) -> String {
        let word = |v: Verdict| match v {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Vacuous => "vacuous",
        };
        format!(
            "verdict: passive_coeff strictly increasing: {}; promptness strictly increasing: {}",
            word(self.passive_verdict),
            word(self.promptness_verdict)
        )
    }
}

pub fn run_fiber_sweep(cfg: &RunConfig) -> Result<FiberSweepOutput, RunError> {
    let sweep = cfg.sweep.as_ref().ok_or(ConfigError::MissingSection("sweep"))?;
    match &cfg.model {
        ModelSection::Vsa(vsa) => {
            sweep_actuator(&vsa.as_antagonistic(), sweep, None, "vsa", None)
        }
        _ => {
            let dr = cfg.dual_rotor()?;
            let trim = cfg.trim();
            let nu_bar = trim.nu_bar();
            let act = dr.as_antagonistic_at_trim(nu_bar)?;
            sweep_actuator(&act, sweep, Some(trim.force), "dual_rotor", Some(nu_bar))
        }
    }
}

fn sweep_actuator<P: ChannelLaw, M: ChannelLaw>(
    act: &AntagonisticActuator<P, M>,
    sweep: &crate::config::SweepSection,
    default_level: Option<f64>,
    model: &str,
    nu_bar: Option<f64>,
) -> Result<FiberSweepOutput, RunError> {
    let start = match (sweep.start, sweep.u1_start) {
        (Some(start), _) => start,
        (None, Some(u1)) => {
            let level = sweep.level.or(default_level).ok_or_else(|| {
                ConfigError::Invalid("sweep with u1_start needs a level (or a trim force)".into())
            })?;
            // Start the solve at the lower-box edge plus one, or at u1.
            let lower = act.admissible_box[1].lower;
            let guess = if u1 > lower { u1 } else { lower + 1.0 };
            let (u2, _) = act.solve_on_level(u1, level, guess, 0)?;
            [u1, u2]
        }
        (None, None) => return Err(ConfigError::Invalid("sweep needs `start` or `u1_start`".into()).into()),
    };
    let path = act.trace_fiber(start, sweep.u1_end, sweep.steps)?;
    let passive = act.monotonicity_sweep(&path, crate::antagonistic::SweepQuantity::Passive)?;
    let prompt = act.monotonicity_sweep(&path, crate::antagonistic::SweepQuantity::Promptness)?;
    let rows = path
        .points
        .iter()
        .zip(&path.residuals)
        .zip(passive.values.iter().zip(&prompt.values))
        .map(|((u, &task_residual), (&passive_coeff, &promptness))| FiberRow {
            u1: u[0],
            u2: u[1],
            task_residual,
            passive_coeff,
            promptness,
        })
        .collect();
    Ok(FiberSweepOutput {
        model: model.to_string(),
        level: path.level,
        nu_bar,
        max_residual: path.max_residual(),
        passive_verdict: Verdict::of(&passive),
        promptness_verdict: Verdict::of(&prompt),
        passive_min_increment: passive.min_increment,
        promptness_min_increment: prompt.min_increment,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocateOutput {
    pub nu_bar: f64,
    pub force_level: f64,
    pub sigma_des: f64,
    #[serde(flatten)]
    pub result: AllocationResult,
    pub common_mode: f64,
    pub differential_mode: f64,
}

pub fn run_allocate(cfg: &RunConfig) -> Result<AllocateOutput, RunError> {
    let alloc = cfg.allocation.as_ref().ok_or(ConfigError::MissingSection("allocation"))?;
    let trim = cfg.trim.as_ref().ok_or(ConfigError::MissingSection("trim"))?.trim_point();
    let dr = cfg.dual_rotor()?;
    let result = dr.allocate(trim, alloc.sigma_des)?;
    let modes = mode_decomposition(result.speeds);
    Ok(AllocateOutput {
        nu_bar: trim.nu_bar,
        force_level: trim.force_level,
        sigma_des: alloc.sigma_des,
        result,
        common_mode: modes.common,
        differential_mode: modes.differential,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub start: f64,
    pub v1: f64,
    pub v2: f64,
    pub external_force: f64,
    pub nu_eq: f64,
    pub c_app: f64,
    pub time_constant: f64,
    pub steady_state: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub mass: f64,
    pub nu0: f64,
    pub dt: f64,
    pub samples: usize,
    pub final_velocity: f64,
    pub segments: Vec<SegmentSummary>,
    /// Least-squares fit of `ln|ν − ν_∞|` against `t` over the first
    /// segment; absent when the response is flat.
    pub fitted_time_constant: Option<f64>,
    /// `|fitted − m/c_app| / (m/c_app)` for the first segment.
    pub time_constant_relative_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateOutput {
    pub trajectory: Trajectory,
    pub summary: SimulationSummary,
}

pub fn run_simulate(cfg: &RunConfig) -> Result<SimulateOutput, RunError> {
    let sim = cfg.simulation.as_ref().ok_or(ConfigError::MissingSection("simulation"))?;
    let body = cfg.body()?;
    let schedule = sim.schedule();
    let trajectory = body.simulate(&schedule, sim.nu0, sim.t_end, sim.dt)?;

    let segments = schedule
        .segments
        .iter()
        .filter(|s| s.start < sim.t_end)
        .map(|s| {
            let c_app = body.apparent_damping(s.speeds)?;
            let nu_eq = body.equilibrium_velocity(s.speeds)?;
            Ok(SegmentSummary {
                start: s.start,
                v1: s.speeds[0],
                v2: s.speeds[1],
                external_force: s.external_force,
                nu_eq,
                c_app,
                time_constant: body.mass / c_app,
                steady_state: nu_eq + s.external_force / c_app,
            })
        })
        .collect::<Result<Vec<_>, DynamicsError>>()?;

    let first = &segments[0];
    let first_end = schedule.segments.get(1).map_or(f64::INFINITY, |s| s.start);
    let fitted = fit_time_constant(
        trajectory.samples.iter().filter(|s| s.t < first_end),
        first.steady_state,
        sim.nu0,
    );
    let deviation = fitted.map(|tau| (tau - first.time_constant).abs() / first.time_constant);

    let summary = SimulationSummary {
        mass: body.mass,
        nu0: sim.nu0,
        dt: sim.dt,
        samples: trajectory.samples.len(),
        final_velocity: trajectory.final_velocity(),
        segments,
        fitted_time_constant: fitted,
        time_constant_relative_deviation: deviation,
    };
    Ok(SimulateOutput { trajectory, summary })
}

/// Fits `ln|ν(t) − ν_∞| = a − t/τ` by ordinary least squares, ignoring
/// samples within `1e-6·|ν₀ − ν_∞|` of the asymptote.
fn fit_time_constant<'a>(samples: impl Iterator<Item = &'a Sample>, nu_inf: f64, nu0: f64) -> Option<f64> {
    let floor = 1e-6 * (nu0 - nu_inf).abs();
    if floor == 0.0 {
        return None;
    }
    let pts: Vec<(f64, f64)> = samples
        .filter(|s| (s.nu - nu_inf).abs() > floor)
        .map(|s| (s.t, (s.nu - nu_inf).abs().ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_y)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
    let slope = sxy / sxx;
    (slope < 0.0).then(|| -1.0 / slope)
}

const TRAJECTORY_HEADER: [&str; 6] = ["t", "nu", "v1", "v2", "F", "F_ext"];

/// Writes `t,nu,v1,v2,F,F_ext` rows with shortest round-trip decimals.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<(), RunError> {
    let mut w = csv::Writer::from_writer(out);
    // Header comes from the serde field names of `Sample`.
    for s in &traj.samples {
        w.serialize(s).map_err(|e| RunError::Output(e.to_string()))?;
    }
    w.flush().map_err(|e| RunError::Output(e.to_string()))
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Vec<Sample>, RunError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(|e| RunError::Output(e.to_string()))?.clone();
    if headers.iter().ne(TRAJECTORY_HEADER) {
        return Err(RunError::Output(format!("unexpected trajectory header {headers:?}")));
    }
    r.deserialize().map(|row| row.map_err(|e| RunError::Output(e.to_string()))).collect()
}

pub fn write_fiber_csv<W: Write>(rows: &[FiberRow], out: W) -> Result<(), RunError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| RunError::Output(e.to_string()))?;
    }
    w.flush().map_err(|e| RunError::Output(e.to_string()))
}

pub fn read_fiber_csv<R: Read>(input: R) -> Result<Vec<FiberRow>, RunError> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|row| row.map_err(|e| RunError::Output(e.to_string())))
        .collect()
}
