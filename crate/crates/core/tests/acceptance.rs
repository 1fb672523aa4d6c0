//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N ... PASS|FAIL` line. Run with
//! `cargo test -p vada --test acceptance -- --nocapture` to see the lines.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vada::aero::{bet_numeric_thrust, derive_coefficients, AffineThrustModel};
use vada::antagonistic::{ChannelLaw, FiberPath, OpenInterval, SweepQuantity};
use vada::dual_rotor::{rotor_actuator, DualRotor, TrimPoint};
use vada::impedance::{mode_decomposition, BodyConfig, Modes};
use vada::verify::{
    random_geometry, random_model, random_tendon_law, random_trim, run_verify, simulation_error, VerifyOptions,
};
use vada::vsa::{TendonLaw, VsaConfig};

const DRAWS: usize = 1000;
const FIBERS: usize = 20;
const PATH_POINTS: usize = 100;

fn rng(criterion: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(0x00AC_CE97);
    rng.set_stream(criterion);
    rng
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

fn report(n: u32, name: &str, ok: bool, detail: String) {
    println!("criterion {n:>2} {name:<28} {}  {detail}", if ok { "PASS" } else { "FAIL" });
}

fn strictly_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] > w[0])
}

#[test]
fn criterion_01_bet_closed_form_fidelity() {
    let mut rng = rng(1);
    let clock = Instant::now();
    let mut worst = 0.0_f64;
    for _ in 0..DRAWS {
        let geom = random_geometry(&mut rng);
        let v = rng.random_range(10.0..1000.0);
        let nu = rng.random_range(-20.0..20.0);
        let panels = rng.random_range(2..=64);
        let closed = derive_coefficients(&geom).unwrap().thrust(v, nu).unwrap();
        let numeric = bet_numeric_thrust(&geom, v, nu, panels).unwrap();
        worst = worst.max(rel(numeric, closed));
    }
    let elapsed = clock.elapsed();
    let ok = worst <= 1e-12 && elapsed < Duration::from_secs(1);
    report(1, "bet closed-form fidelity", ok, format!("max rel err {worst:.3e}, {elapsed:.2?}"));
    assert!(worst <= 1e-12, "worst relative error {worst:e}");
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
}

#[test]
fn criterion_02_inflow_sensitivity_and_hardening() {
    let mut rng = rng(2);
    let clock = Instant::now();
    let h = 1e-5;
    let mut worst = 0.0_f64;
    let mut signs_ok = true;
    for _ in 0..DRAWS {
        let m = random_model(&mut rng);
        let v = rng.random_range(0.1..50.0);
        let nu = rng.random_range(-10.0..10.0);
        let lambda = m.inflow_sensitivity(v, nu).unwrap();
        // Exact: λ = k_D v and ∂λ/∂v = k_D, both positive.
        signs_ok &= lambda == m.k_inflow * v && lambda > 0.0;
        signs_ok &= m.hardening_rate(v, nu) == m.k_inflow && m.k_inflow > 0.0;
        let t = |x: f64| m.thrust(v, x).unwrap();
        let fd = -(t(nu + h) - t(nu - h)) / (2.0 * h);
        worst = worst.max(rel(fd, lambda));
    }
    let elapsed = clock.elapsed();
    let ok = signs_ok && worst <= 1e-6 && elapsed < Duration::from_secs(1);
    report(2, "inflow sensitivity/hardening", ok, format!("max FD rel err {worst:.3e}, {elapsed:.2?}"));
    assert!(signs_ok);
    assert!(worst <= 1e-6, "worst relative error {worst:e}");
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
}

/// Passive coefficients and promptness along `path`, both required to be
/// strictly increasing, plus the order-free monotone relation between them.
fn sweep_ok<P: ChannelLaw, M: ChannelLaw>(
    act: &vada::antagonistic::AntagonisticActuator<P, M>,
    path: &FiberPath,
    with_promptness: bool,
) -> bool {
    let sigma = act.monotonicity_sweep(path, SweepQuantity::Passive).unwrap();
    if !strictly_increasing(&sigma.values) {
        return false;
    }
    if !with_promptness {
        return true;
    }
    let rho = act.monotonicity_sweep(path, SweepQuantity::Promptness).unwrap();
    strictly_increasing(&rho.values) && act.passive_promptness_relation(path).unwrap().is_monotone
}

#[test]
fn criterion_03_vsa_cocontraction() {
    let mut rng = rng(3);
    let clock = Instant::now();
    let mut failures = 0;
    let mut worst_residual = 0.0_f64;
    for family in 0..3 {
        for _ in 0..FIBERS {
            let law = random_tendon_law(&mut rng, family);
            let radius = rng.random_range(0.2..1.5);
            let state = [rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)];
            let vsa = VsaConfig::new(law, radius, state).unwrap();
            let act = vsa.as_antagonistic();
            let u1_end = state[0] + rng.random_range(1.0..3.0);
            let path = act.trace_fiber(state, u1_end, PATH_POINTS - 1).unwrap();
            assert_eq!(path.len(), PATH_POINTS);
            worst_residual = worst_residual.max(path.max_residual());
            if !sweep_ok(&act, &path, true) {
                failures += 1;
            }
        }
    }
    let elapsed = clock.elapsed();
    let ok = failures == 0 && worst_residual <= 1e-10 && elapsed < Duration::from_secs(5);
    report(
        3,
        "vsa co-contraction monotone",
        ok,
        format!("{failures} failing fibers of {}, max residual {worst_residual:.1e}, {elapsed:.2?}", 3 * FIBERS),
    );
    assert_eq!(failures, 0);
    assert!(worst_residual <= 1e-10);
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
}

#[test]
fn criterion_04_vada_cocontraction() {
    let mut rng = rng(4);
    let clock = Instant::now();
    let speed_box = OpenInterval::new(0.5, 1.0e3).unwrap();
    let mut failures = 0;
    let mut fibers = 0;
    let mut asymmetric = 0;
    let mut worst_residual = 0.0_f64;

    // ν̄ = 0 first, then ten random trims inside the monotone regime.
    let mut cases: Vec<(AffineThrustModel, AffineThrustModel, f64)> = Vec::new();
    for i in 0..11 {
        let fwd = random_model(&mut rng);
        // Alternate identical and distinct pairs so both kinds are covered.
        let bwd = if i % 2 == 0 { fwd } else { random_model(&mut rng) };
        let nu_bar = if i == 0 { 0.0 } else { random_trim(&mut rng, &fwd, &bwd, speed_box.lower) };
        cases.push((fwd, bwd, nu_bar));
    }
    for (fwd, bwd, nu_bar) in cases {
        let dr = DualRotor::new(fwd, bwd, [speed_box; 2]).unwrap();
        if !dr.is_symmetric() {
            asymmetric += 1;
        }
        let act = dr.as_antagonistic_at_trim(nu_bar).unwrap();
        for _ in 0..FIBERS {
            let start = [rng.random_range(1.0..3.0), rng.random_range(1.0..3.0)];
            let u1_end = start[0] + rng.random_range(2.0..6.0);
            let path = act.trace_fiber(start, u1_end, PATH_POINTS - 1).unwrap();
            fibers += 1;
            worst_residual = worst_residual.max(path.max_residual());
            let damping: Vec<f64> = path.points.iter().map(|&v| dr.damping_at_trim(v, nu_bar).unwrap()).collect();
            if !(sweep_ok(&act, &path, false) && strictly_increasing(&damping)) {
                failures += 1;
            }
        }
    }
    let elapsed = clock.elapsed();
    let ok = failures == 0 && worst_residual <= 1e-10 && asymmetric > 0 && elapsed < Duration::from_secs(5);
    report(
        4,
        "vada co-contraction monotone",
        ok,
        format!(
            "{failures} failing of {fibers} fibers ({asymmetric} asymmetric pairs), max residual {worst_residual:.1e}, {elapsed:.2?}"
        ),
    );
    assert_eq!(failures, 0);
    assert!(worst_residual <= 1e-10, "residual {worst_residual:e}");
    assert!(asymmetric > 0);
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
}

#[test]
fn criterion_05_damping_fd() {
    let mut rng = rng(5);
    let h = 1e-5;
    let mut worst = 0.0_f64;
    for _ in 0..DRAWS {
        let fwd = random_model(&mut rng);
        let bwd = if rng.random_bool(0.5) { fwd } else { random_model(&mut rng) };
        let dr = DualRotor::new(fwd, bwd, [OpenInterval::POSITIVE; 2]).unwrap();
        let v = [rng.random_range(0.5..20.0), rng.random_range(0.5..20.0)];
        let nu = rng.random_range(-5.0..5.0);
        let f = |x: f64| dr.net_force(v, x).unwrap();
        let fd = -(f(nu + h) - f(nu - h)) / (2.0 * h);
        worst = worst.max(rel(fd, dr.damping_at_trim(v, nu).unwrap()));
    }
    let ok = worst <= 1e-6;
    report(5, "damping = -dF/dnu", ok, format!("max FD rel err {worst:.3e}"));
    assert!(ok, "worst relative error {worst:e}");
}

#[test]
fn criterion_06_allocation_round_trip() {
    let mut rng = rng(6);
    let mut worst = 0.0_f64;
    let mut infeasible_draws = 0;
    for _ in 0..DRAWS {
        let fwd = random_model(&mut rng);
        let bwd = if rng.random_bool(0.5) { fwd } else { random_model(&mut rng) };
        let dr = DualRotor::new(fwd, bwd, [OpenInterval::POSITIVE; 2]).unwrap();
        let target = [rng.random_range(1.0..10.0), rng.random_range(1.0..10.0)];
        let nu_bar = rng.random_range(-2.0..2.0);
        let trim = TrimPoint { nu_bar, force_level: dr.net_force(target, nu_bar).unwrap() };
        let sigma = dr.damping_at_trim(target, nu_bar).unwrap();
        let result = dr.allocate(trim, sigma).unwrap();
        if !result.feasible {
            infeasible_draws += 1;
            continue;
        }
        let f = dr.net_force(result.speeds, nu_bar).unwrap();
        let s = dr.damping_at_trim(result.speeds, nu_bar).unwrap();
        worst = worst.max(rel(f, trim.force_level)).max(rel(s, sigma));
    }

    let unit = DualRotor::symmetric(AffineThrustModel::new(1.0, 1.0).unwrap()).unwrap();
    let hand = unit.allocate(TrimPoint { nu_bar: 0.0, force_level: 3.0 }, 4.0).unwrap();
    let hand_ok = hand.feasible && hand.speeds == [2.375, 1.625];

    // Constructed |d| ≥ s: with k_T = k_D = 1, ν̄ = 0, σ = 2 gives s = 2 and
    // d = F̄ / 2, so F̄ = 4 sits on the boundary and F̄ = ±5 beyond it.
    let infeasible_ok = [4.0, 5.0, -5.0, 40.0].iter().all(|&force| {
        let r = unit.allocate(TrimPoint { nu_bar: 0.0, force_level: force }, 2.0).unwrap();
        !r.feasible && r.infeasibility.is_some()
    });

    let ok = worst <= 1e-9 && infeasible_draws == 0 && hand_ok && infeasible_ok;
    report(
        6,
        "allocation round trip",
        ok,
        format!("max rel err {worst:.3e}, hand example {:?}, infeasible detected: {infeasible_ok}", hand.speeds),
    );
    assert_eq!(infeasible_draws, 0);
    assert!(worst <= 1e-9, "worst relative error {worst:e}");
    assert!(hand_ok, "{hand:?}");
    assert!(infeasible_ok);
}

fn random_body(rng: &mut ChaCha8Rng) -> (BodyConfig, [f64; 2]) {
    let model = AffineThrustModel::new(rng.random_range(0.2..2.0), rng.random_range(0.2..1.0)).unwrap();
    let body = BodyConfig::new(rng.random_range(1.0..5.0), DualRotor::symmetric(model).unwrap()).unwrap();
    (body, [rng.random_range(0.5..3.0), rng.random_range(0.5..3.0)])
}

#[test]
fn criterion_07_impedance_dynamics() {
    let mut rng = rng(7);
    let mut worst = 0.0_f64;
    let mut ratios = Vec::new();
    let mut worst_eq = 0.0_f64;
    for _ in 0..20 {
        let (body, v) = random_body(&mut rng);
        let nu0 = rng.random_range(-3.0..3.0);
        let f_ext = rng.random_range(-2.0..2.0);
        worst = worst.max(simulation_error(&body, v, nu0, f_ext, 1e-3));

        // Convergence order: halve a step coarse enough that truncation
        // error dominates rounding.
        let tau = body.time_constant(v).unwrap();
        let coarse = simulation_error(&body, v, nu0, f_ext, tau / 8.0);
        let fine = simulation_error(&body, v, nu0, f_ext, tau / 16.0);
        ratios.push(coarse / fine);

        let nu_eq = body.equilibrium_velocity(v).unwrap();
        let m = body.dual_rotor.rotor_fwd;
        assert_eq!(nu_eq, m.k_thrust / m.k_inflow * (v[0] - v[1]));
        worst_eq = worst_eq.max(body.dual_rotor.net_force(v, nu_eq).unwrap().abs());
    }
    let ratio_ok = ratios.iter().all(|r| (12.0..=20.0).contains(r));
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    let ok = worst <= 1e-8 && ratio_ok && worst_eq <= 1e-12;
    report(
        7,
        "impedance dynamics",
        ok,
        format!("max err {worst:.3e}, halving ratio [{lo:.2}, {hi:.2}], |F(nu_eq)| {worst_eq:.1e}"),
    );
    assert!(worst <= 1e-8, "worst error {worst:e}");
    assert!(ratio_ok, "{ratios:?}");
    assert!(worst_eq <= 1e-12, "{worst_eq:e}");
}

#[test]
fn criterion_08_mode_decoupling() {
    let mut rng = rng(8);
    let mut ok = true;
    let mut worst_eq_shift = 0.0_f64;
    let mut worst_c_shift = 0.0_f64;
    for _ in 0..100 {
        let (body, v) = random_body(&mut rng);
        let modes = mode_decomposition(v);
        let nu_eq = body.equilibrium_velocity(v).unwrap();
        let c_app = body.apparent_damping(v).unwrap();

        // Co-contraction step: common mode up, differential fixed.
        let stepped = Modes { common: modes.common + rng.random_range(0.1..2.0), ..modes }.speeds();
        let d_eq = (body.equilibrium_velocity(stepped).unwrap() - nu_eq).abs();
        worst_eq_shift = worst_eq_shift.max(d_eq);
        ok &= d_eq <= 1e-12 && body.apparent_damping(stepped).unwrap() > c_app;

        // Differential step: common fixed, differential changed.
        let delta = rng.random_range(0.05..0.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let stepped = Modes { differential: modes.differential + delta, ..modes }.speeds();
        if !body.dual_rotor.contains(stepped) {
            continue;
        }
        let d_c = (body.apparent_damping(stepped).unwrap() - c_app).abs();
        worst_c_shift = worst_c_shift.max(d_c);
        ok &= d_c <= 1e-12 && body.equilibrium_velocity(stepped).unwrap() != nu_eq;
    }
    report(
        8,
        "mode decoupling",
        ok,
        format!("max nu_eq shift (common step) {worst_eq_shift:.1e}, max c_app shift (differential step) {worst_c_shift:.1e}"),
    );
    assert!(ok);
}

#[test]
fn criterion_09_isomorphism() {
    let mut rng = rng(9);
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let model = random_model(&mut rng);
        let nu_bar = rng.random_range(-1.0..1.0);
        let dr = DualRotor::new(model, model, [OpenInterval::POSITIVE; 2]).unwrap();
        let rotor_act = rotor_actuator(model, model, [OpenInterval::POSITIVE; 2], nu_bar);
        for i in 1..=10 {
            for j in 1..=10 {
                let u = [0.3 * i as f64, 0.3 * j as f64];
                let vsa = VsaConfig::new(TendonLaw::Quadratic { k: model.k_inflow }, 1.0, u).unwrap();
                let sigma_vsa = vsa.stiffness().unwrap();
                let sigma_vsa_generic = vsa.as_antagonistic().passive_coefficient(u).unwrap();
                let sigma_vada = dr.damping_at_trim(u, nu_bar).unwrap();
                let sigma_vada_generic = rotor_act.passive_coefficient(u).unwrap();
                for s in [sigma_vsa_generic, sigma_vada, sigma_vada_generic] {
                    worst = worst.max(rel(s, sigma_vsa));
                }
            }
        }
    }
    let ok = worst <= 1e-12;
    report(9, "vsa/vada isomorphism", ok, format!("max rel diff {worst:.1e} over 5000 command pairs"));
    assert!(ok, "{worst:e}");
}

#[test]
fn criterion_10_necessity_of_hardening() {
    let opts = VerifyOptions { seed: 7, draws: 20, inject_non_hardening: false };
    let baseline = run_verify(opts);
    let injected = run_verify(VerifyOptions { inject_non_hardening: true, ..opts });
    let props = ["vada_damping_monotone_zero_trim", "vada_damping_monotone_at_trim"];
    let baseline_ok = baseline.all_passed();
    let detected = props.iter().all(|p| !injected.property_passed(p));
    let ok = baseline_ok && detected;
    report(
        10,
        "non-hardening model detected",
        ok,
        format!(
            "baseline {}/{} pass; injected run fails {:?}",
            baseline.summary.passed, baseline.summary.total, injected.summary.failed_properties
        ),
    );
    assert!(baseline_ok, "{:?}", baseline.summary);
    assert!(detected, "{:?}", injected.summary);
}
