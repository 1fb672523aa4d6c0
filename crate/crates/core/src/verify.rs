//! Randomized property suite behind `vada verify`.
//!
//! Each property draws its parameters from its own ChaCha stream derived
//! from the run seed, so reports are reproducible byte for byte and adding
//! draws to one property does not perturb the others.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::aero::{bet_numeric_thrust, derive_coefficients, AffineThrustModel, NonHardeningThrust, RotorGeometry};
use crate::antagonistic::{AntagonisticActuator, ChannelLaw, OpenInterval, SweepQuantity, FIBER_TOLERANCE};
use crate::dual_rotor::{rotor_actuator, DualRotor, TrimPoint};
use crate::impedance::{BodyConfig, InputSchedule};
use crate::vsa::{TendonLaw, VsaConfig};

pub const DEFAULT_DRAWS: usize = 20;

/// Central-difference step used by every derivative check.
pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-6;
pub const QUADRATURE_TOLERANCE: f64 = 1e-12;
pub const ALLOCATION_TOLERANCE: f64 = 1e-9;
pub const SIMULATION_TOLERANCE: f64 = 1e-8;
pub const IDENTITY_TOLERANCE: f64 = 1e-12;
/// Points per traced co-contraction path.
pub const PATH_POINTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Passes when `worst ≤ threshold`.
    RelativeError,
    AbsoluteError,
    /// Passes when `worst > threshold`.
    MinIncrement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyRecord {
    pub property: String,
    pub draw: usize,
    pub parameters: serde_json::Value,
    pub pass: bool,
    pub metric: Metric,
    pub worst: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub failed_properties: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub draws_per_property: usize,
    pub inject_non_hardening: bool,
    pub summary: ReportSummary,
    pub records: Vec<PropertyRecord>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn property_passed(&self, property: &str) -> bool {
        self.records.iter().filter(|r| r.property == property).all(|r| r.pass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub draws: usize,
    pub inject_non_hardening: bool,
}

type PropertyFn = fn(&mut ChaCha8Rng, &VerifyOptions) -> (serde_json::Value, Metric, f64, f64);

/// Property ids in report order.
pub const PROPERTIES: [&str; 13] = [
    "bet_closed_form",
    "inflow_sensitivity_positive",
    "hardening_positive",
    "speed_sensitivity_fd",
    "vsa_stiffness_fd",
    "vsa_cocontraction_monotone",
    "vada_damping_monotone_zero_trim",
    "vada_damping_monotone_at_trim",
    "damping_fd",
    "allocation_round_trip",
    "impedance_oracle",
    "mode_decoupling",
    "isomorphism",
];

const CHECKS: [PropertyFn; 13] = [
    bet_closed_form,
    inflow_sensitivity_positive,
    hardening_positive,
    speed_sensitivity_fd,
    vsa_stiffness_fd,
    vsa_cocontraction_monotone,
    vada_zero_trim,
    vada_at_trim,
    damping_fd,
    allocation_round_trip,
    impedance_oracle,
    mode_decoupling,
    isomorphism,
];

pub fn run_verify(opts: VerifyOptions) -> VerificationReport {
    let mut records = Vec::with_capacity(PROPERTIES.len() * opts.draws);
    for (index, (name, check)) in PROPERTIES.iter().zip(CHECKS).enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(index as u64 + 1);
        for draw in 0..opts.draws {
            let (parameters, metric, worst, threshold) = check(&mut rng, &opts);
            let pass = match metric {
                Metric::RelativeError | Metric::AbsoluteError => worst <= threshold,
                Metric::MinIncrement => worst > threshold,
            };
            records.push(PropertyRecord {
                property: name.to_string(),
                draw,
                parameters,
                pass,
                metric,
                worst,
                threshold,
            });
        }
    }
    let passed = records.iter().filter(|r| r.pass).count();
    let mut failed_properties: Vec<String> =
        records.iter().filter(|r| !r.pass).map(|r| r.property.clone()).collect();
    failed_properties.dedup();
    VerificationReport {
        seed: opts.seed,
        draws_per_property: opts.draws,
        inject_non_hardening: opts.inject_non_hardening,
        summary: ReportSummary { total: records.len(), passed, failed: records.len() - passed, failed_properties },
        records,
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Maps NaN to +∞ so a broken evaluation can never look like a pass.
fn finite_or_inf(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x
    }
}

pub fn random_geometry(rng: &mut impl Rng) -> RotorGeometry {
    RotorGeometry {
        blade_count: rng.random_range(1..=6),
        radius: rng.random_range(0.05..0.5),
        chord: rng.random_range(0.01..0.1),
        pitch_angle: rng.random_range(0.05..0.5),
        lift_slope: rng.random_range(4.0..7.0),
        air_density: rng.random_range(0.9..1.3),
    }
}

pub fn random_model(rng: &mut impl Rng) -> AffineThrustModel {
    AffineThrustModel { k_thrust: rng.random_range(0.2..2.0), k_inflow: rng.random_range(0.2..2.0) }
}

pub fn random_tendon_law(rng: &mut impl Rng, family: usize) -> TendonLaw {
    match family % 3 {
        0 => TendonLaw::Quadratic { k: rng.random_range(0.5..2.0) },
        1 => TendonLaw::Exponential { k: rng.random_range(0.1..1.0), alpha: rng.random_range(0.3..1.5) },
        _ => TendonLaw::Cubic { k: rng.random_range(0.5..2.0) },
    }
}

fn bet_closed_form(rng: &mut ChaCha8Rng, _: &VerifyOptions) -> (serde_json::Value, Metric, f64, f64) {
    let geom = random_geometry(rng);
    let v = rng.random_range(10.0..1000.0);
    let nu = rng.random_range(-20.0..20.0);
    let panels = rng.random_range(2..=20);
    let model = derive_coefficients(&geom).expect("drawn geometry is valid");
    let closed = model.thrust(v, nu).expect("positive speed");
    let numeric = bet_numeric_thrust(&geom, v, nu, panels).expect("valid quadrature");
    (
        json!({ "geometry": geom, "v": v, "nu_in": nu, "panels": panels }),
        Metric::RelativeError,
        finite_or_inf(rel_err(numeric, closed)),
        QUADRATURE_TOLERANCE,
    )
}

fn inflow_sensitivity_positive(rng: &mut ChaCha8Rng, _: &VerifyOptions) -> (serde_json::Value, Metric, f64, f64) {
    let m = random_model(rng);
    let v = rng.random_range(0.1..50.0);
    let nu = rng.random_range(-10.0..10.0);
    let lambda = m.inflow_sensitivity(v, nu).expect("positive speed");
    let h = FD_STEP;
    let fd = -(m.eval(v, nu + h) - m.eval(v, nu - h)) / (2.0 * h);
    let err = if lambda > 0.0 { rel_err(fd, lambda) } else { f64::INFINITY };
    (json!({ "model": m, "v": v, "nu_in": nu }), Metric::RelativeError, finite_or_inf(err), FD_TOLERANCE)
}

fn hardening_positive(rng: &mut ChaCha8Rng, _: &VerifyOptions) -> (serde_json::Value, Metric, f64, f64) {
    let m = random_model(rng);
    let v = rng.random_range(0.1..50.0);
    let nu = rng.random_range(-10.0..10.0);
    let rate = m.hardening_rate(v, nu);
    let h = FD_STEP;
    let lam = |s: f64| m.inflow_sensitivity(s, nu).expect("positive speed");
    let fd = (lam(v + h) - lam(v - h)) / (2.0 * h);
    let err = if rate > 0.0 { rel_err(fd, rate) } else { f64::INFINITY };
    (json!({ "model": m, "v": v, "nu_in": nu }), Metric::RelativeError, finite_or_inf(err), FD_TOLERANCE)
}

fn speed_sensitivity_fd(rng: &mut ChaCha8Rng, _: &VerifyOptions) -> (serde_json::Value, Metric, f64, f64) {
    let m = random_model(rng);
    let v = rng.random_range(0.1..50.0);
    let nu = rng.random_range(-10.0..10.0);
    let h = FD_STEP;
    let fd = (m.eval(v + h, nu) - m.eval(v - h, nu)) / (2.0 * h);
    let err = rel_err(fd, m.speed_sensitivity(v, nu));
    (json!({ "model": m, "v": v, "nu_in": nu }), Metric::RelativeError, finite_or_inf(err), FD_TOLERANCE)
}

fn random_vsa(rng: &mut ChaCha8Rng, family: usize) -> VsaConfig {
    let law = random_tendon_law(rng, family);
    let radius = rng.random_range(0.2..1.5);
    let state = [rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)];
    VsaConfig::new(law, radius, state).expect("drawn VSA is valid")
}

fn vsa_stiffness_fd(rng: &mut ChaCha8Rng, _: &VerifyOptions) -> (serde_json::Value, Metric, f64, f64) {
    let family = rng.random_range(0..3);
    let cfg = random_vsa(rng, family);
    let h = FD_STEP;
    let fd = -(cfg.joint_torque(h).expect("small deflection") - cfg.joint_torque(-h).expect("small deflection"))
        / (2.0 * h);
    let err = rel_err(fd, cfg.stiffness().expect("valid"));
    (json!({ "vsa": cfg }), Metric::RelativeError, finite_or_inf(err), FD_TOLERANCE)
}

/// Traces a co-contraction path and returns the smallest adjacent increment
/// of the passive coefficient (and of promptness when `with_promptness`),
/// or `-∞` if the trace fails or a fiber residual exceeds tolerance.
pub fn cocontraction_margin<P: ChannelLaw, M: ChannelLaw>(
    act: &AntagonisticActuator<P, M>,
    start: [f64; 2],
    u1_end: f64,
    with_promptness: bool,
) -> f64 {
    let Ok(path) = act.trace_fiber(start, u1_end, PATH_POINTS - 1) else {
        return f64::NEG_INFINITY;
    };
    if path.max_residual() > FIBER_TOLERANCE * path.level.abs().max(1.0) {
        return f64::NEG_INFINITY;
    }
    let mut quantities = vec![SweepQuantity::Passive];
    if with_promptness {
        quantities.push(SweepQuantity::Promptness);
    }
    let mut margin = f64::INFINITY;
    for q in quantities {
        match act.monotonicity_sweep(&path, q) {
            Ok(report) => margin = margin.min(report.min_increment.unwrap_or(f64::NEG_INFINITY)),
            Err(_) => return f64::NEG_INFINITY,
        }
    }
    if with_promptness && !act.passive_promptness_relation(&path).is_ok_and(|r| r.is_monotone) {
        return margin.min(0.0);
    }
    margin
}

fn vsa_cocontraction_monotone(rng: &mut ChaCha8Rng, _: &VerifyOptions) -> (serde_json::Value, Metric, f64, f64) {
    let family = rng.random_range(0..3);
    let cfg = random_vsa(rng, family);
    let u1_end = cfg.state[0] + rng.random_range(1.0..3.0);
    let margin = cocontraction_margin(&cfg.as_antagonistic(), cfg.state, u1_end, true);
    (json!({ "vsa": cfg, "u1_end": u1_end }), Metric::MinIncrement, finite_or_inf(margin), 0.0)
}

const ROTOR_BOX: OpenInterval = OpenInterval { lower: 0.5, upper: 1.0e3 };

fn random_rotor_pair(rng: &mut ChaCha8Rng) -> (AffineThrustModel, AffineThrustModel) {
    let fwd = random_model(rng);
    let bwd = if rng.random_bool(0.5) { fwd } else { random_model(rng) };
    (fwd, bwd)
}

fn rotor_margin(
    fwd: AffineThrustModel,
    bwd: AffineThrustModel,
    nu_bar: f64,
    start: [f64; 2],
    u1_end: f64,
    opts: &VerifyOptions,
) -> f64 {
    if opts.inject_non_hardening {
        // Same k_T, but λ frozen at its value at the start speeds.
        let flat = |m: AffineThrustModel, v: f64| NonHardeningThrust { k_thrust: m.k_thrust, inflow_drag: m.k_inflow * v };
        let act = rotor_actuator(flat(fwd, start[0]), flat(bwd, start[1]), [ROTOR_BOX; 2], nu_bar);
        cocontraction_margin(&act, start, u1_end, false)
    } else {
        let act = rotor_actuator(fwd, bwd, [ROTOR_BOX; 2], nu_bar);
        cocontraction_margin(&act, start, u1_end, false)
    }
}

fn vada_zero_trim(rng: &mut ChaCha8Rng, opts: &VerifyOptions) -> (serde_json::Value, Metric, f64, f64) {
    let (fwd, bwd) = random_rotor_pair(rng);
    let start = [rng.random_range(1.0..3.0), rng.random_range(1.0..3.0)];
    let u1_end = start[0] + rng.random_range(2.0..6.0);
    let margin = rotor_margin(fwd, bwd, 0.0, start, u1_end, opts);
    (
        json!({ "rotor_fwd": fwd, "rotor_bwd": bwd, "nu_bar": 0.0, "start": start, "u1_end": u1_end }),
        Metric::MinIncrement,
        finite_or_inf(margin),
        0.0,
    )
}

/// A trim strictly inside the monotone regime of both rotors at the box's
/// lower speed.
pub fn random_trim(rng: &mut impl Rng, fwd: &AffineThrustModel, bwd: &AffineThrustModel, lower: f64) -> f64 {
    let hi = 0.9 * fwd.monotone_regime_bound(lower);
    let lo = -0.9 * bwd.monotone_regime_bound(lower);
    rng.random_range(lo..hi)
}

fn vada_at_trim(rng: &mut ChaCha8Rng, opts: &VerifyOptions) -> (serde_json::Value, Metric, f64, f64) {
    let (fwd, bwd) = random_rotor_pair(rng);
    let nu_bar = random_trim(rng, &fwd, &bwd, ROTOR_BOX.lower);
    let start = [rng.random_range(1.0..3.0), rng.random_range(1.0..3.0)];
    let u1_end = start[0] + rng.random_range(2.0..6.0);
    let margin = rotor_margin(fwd, bwd, nu_bar, start, u1_end, opts);
    (
        json!({ "rotor_fwd": fwd, "rotor_bwd": bwd, "nu_bar": nu_bar, "start": start, "u1_end": u1_end }),
        Metric::MinIncrement,
        finite_or_inf(margin),
        0.0,
    )
}

fn damping_fd(rng: &mut ChaCha8Rng, _: &VerifyOptions) -> (serde_json::Value, Metric, f64, f64) {
    let (fwd, bwd) = random_rotor_pair(rng);
    let dr = DualRotor::new(fwd, bwd, [OpenInterval::POSITIVE; 2]).expect("valid rotors");
    let v = [rng.random_range(0.5..20.0), rng.random_range(0.5..20.0)];
    let nu = rng.random_range(-5.0..5.0);
    let h = FD_STEP;
    let f = |x: f64| dr.net_force(v, x).expect("in box");
    let fd = -(f(nu + h) - f(nu - h)) / (2.0 * h);
    let err = rel_err(fd, dr.damping_at_trim(v, nu).expect("in box"));
    (
        json!({ "rotor_fwd": fwd, "rotor_bwd": bwd, "v": v, "nu_bar": nu }),
        Metric::RelativeError,
        finite_or_inf(err),
        FD_TOLERANCE,
    )
}

fn allocation_round_trip(rng: &mut ChaCha8Rng, _: &VerifyOptions) -> (serde_json::Value, Metric, f64, f64) {
    let (fwd, bwd) = random_rotor_pair(rng);
    let dr = DualRotor::new(fwd, bwd, [OpenInterval::POSITIVE; 2]).expect("valid rotors");
    // Request what a known speed pair produces, so the request is feasible.
    let target = [rng.random_range(1.0..10.0), rng.random_range(1.0..10.0)];
    let nu_bar = rng.random_range(-2.0..2.0);
    let trim = TrimPoint { nu_bar, force_level: dr.net_force(target, nu_bar).expect("in box") };
    let sigma = dr.damping_at_trim(target, nu_bar).expect("in box");
    let err = match dr.allocate(trim, sigma) {
        Ok(r) if r.feasible => {
            let f = dr.net_force(r.speeds, nu_bar).expect("feasible is in box");
            let s = dr.damping_at_trim(r.speeds, nu_bar).expect("feasible is in box");
            rel_err(f, trim.force_level).max(rel_err(s, sigma))
        }
        _ => f64::INFINITY,
    };
    (
        json!({ "rotor_fwd": fwd, "rotor_bwd": bwd, "trim": trim, "sigma_des": sigma }),
        Metric::RelativeError,
        finite_or_inf(err),
        ALLOCATION_TOLERANCE,
    )
}

fn random_body(rng: &mut ChaCha8Rng) -> (BodyConfig, [f64; 2]) {
    let model = AffineThrustModel { k_thrust: rng.random_range(0.2..2.0), k_inflow: rng.random_range(0.2..1.0) };
    let body = BodyConfig::new(rng.random_range(1.0..5.0), DualRotor::symmetric(model).expect("valid"))
        .expect("valid body");
    let v = [rng.random_range(0.5..3.0), rng.random_range(0.5..3.0)];
    (body, v)
}

/// Largest deviation of the RK4 trajectory from the closed-form response
/// over five time constants.
pub fn simulation_error(body: &BodyConfig, v: [f64; 2], nu0: f64, f_ext: f64, dt: f64) -> f64 {
    let tau = body.time_constant(v).expect("in box");
    let schedule = InputSchedule::constant(v, f_ext);
    let Ok(traj) = body.simulate(&schedule, nu0, 5.0 * tau, dt) else {
        return f64::INFINITY;
    };
    traj.samples
        .iter()
        .map(|s| (s.nu - body.analytic_response(v, nu0, f_ext, s.t).expect("in box")).abs())
        .fold(0.0, f64::max)
}

fn impedance_oracle(rng: &mut ChaCha8Rng, _: &VerifyOptions) -> (serde_json::Value, Metric, f64, f64) {
    let (body, v) = random_body(rng);
    let nu0 = rng.random_range(-3.0..3.0);
    let f_ext = rng.random_range(-2.0..2.0);
    let err = simulation_error(&body, v, nu0, f_ext, 1e-3);
    (
        json!({ "body": body, "v": v, "nu0": nu0, "f_ext": f_ext, "dt": 1e-3 }),
        Metric::AbsoluteError,
        finite_or_inf(err),
        SIMULATION_TOLERANCE,
    )
}

fn mode_decoupling(rng: &mut ChaCha8Rng, _: &VerifyOptions) -> (serde_json::Value, Metric, f64, f64) {
    let (body, v) = random_body(rng);
    let delta = rng.random_range(0.1..2.0);
    let co = [v[0] + delta, v[1] + delta];
    let nu_eq = body.equilibrium_velocity(v).expect("in box");
    let c_app = body.apparent_damping(v).expect("in box");
    let drift = (body.equilibrium_velocity(co).expect("in box") - nu_eq).abs() / nu_eq.abs().max(1.0);
    let damping_gain = body.apparent_damping(co).expect("in box") - c_app;

    let small = 0.4 * v[0].min(v[1]);
    let diff = [v[0] + small, v[1] - small];
    let damping_drift = (body.apparent_damping(diff).expect("in box") - c_app).abs() / c_app.max(1.0);
    let eq_change = (body.equilibrium_velocity(diff).expect("in box") - nu_eq).abs();

    let ok = damping_gain > 0.0 && eq_change > 0.0;
    let worst = if ok { drift.max(damping_drift) } else { f64::INFINITY };
    (
        json!({ "body": body, "v": v, "co_contraction": delta, "differential": small }),
        Metric::RelativeError,
        finite_or_inf(worst),
        IDENTITY_TOLERANCE,
    )
}

fn isomorphism(rng: &mut ChaCha8Rng, _: &VerifyOptions) -> (serde_json::Value, Metric, f64, f64) {
    let model = random_model(rng);
    let dr = DualRotor::symmetric(model).expect("valid");
    let vsa = VsaConfig::new(TendonLaw::Quadratic { k: model.k_inflow }, 1.0, [1.0, 1.0]).expect("valid");
    let u = [rng.random_range(0.1..20.0), rng.random_range(0.1..20.0)];
    let aero = dr.damping_at_trim(u, 0.0).expect("in box");
    let tendon = vsa.with_state(u).stiffness().expect("valid");
    (json!({ "model": model, "u": u }), Metric::AbsoluteError, finite_or_inf((aero - tendon).abs()), IDENTITY_TOLERANCE)
}
