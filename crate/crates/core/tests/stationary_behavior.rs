//! Stationary construction and quantitative bound checks: the averaged
//! clouds must converge to known laws, and every closed-form bound is
//! cross-checked against an independent numerical oracle.

use memsde_core::drift::DriftSpec;
use memsde_core::history::PastHistory;
use memsde_core::integrate::{simulate, simulate_ensemble, simulate_with_increments};
use memsde_core::stationary::checks::{
    gronwall_moment_bound, growth_diagnostic, increment_tail_check, moment_bound_check,
    moment_cap,
};
use memsde_core::stationary::{gaussian_cloud, kb_average, w1_distance, SamplingMode};
use nalgebra::DMatrix;

/// Classic fourth-order Runge-Kutta for the scalar comparison ODE
/// `y' = (2 c1 + 1) - 2 c2 y`, sharing nothing with the closed form.
fn rk4_comparison_ode(c1: f64, c2: f64, y0: f64, t: f64, h: f64) -> f64 {
    let f = |y: f64| (2.0 * c1 + 1.0) - 2.0 * c2 * y;
    let steps = (t / h).round() as usize;
    let h = t / steps as f64;
    let mut y = y0;
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f(y + 0.5 * h * k1);
        let k3 = f(y + 0.5 * h * k2);
        let k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y
}

#[test]
fn gronwall_bound_matches_an_rk4_solve_of_the_comparison_ode() {
    let (c1, c2, y0) = (0.3, 0.7, 4.0);
    for t in [0.5, 1.0, 3.0] {
        let closed = gronwall_moment_bound(c1, c2, y0, t).unwrap();
        let numeric = rk4_comparison_ode(c1, c2, y0, t, 1e-4);
        assert!(
            (closed - numeric).abs() < 1e-10,
            "t = {t}: closed form {closed} vs RK4 {numeric}"
        );
    }
    // the ODE settles on the moment cap
    let limit = rk4_comparison_ode(c1, c2, y0, 30.0, 1e-3);
    let cap = moment_cap(c1, c2).unwrap();
    assert!(
        (limit - cap).abs() < 1e-9,
        "equilibrium {limit} must equal the cap {cap}"
    );
}

/// Two independent Krylov-Bogolyubov clouds of the same size estimate the
/// same law, so their distance calibrates the sampling noise floor.
#[test]
fn independent_kb_clouds_sit_within_the_noise_floor() {
    let spec = DriftSpec::ou(0.5, 1).unwrap();
    let initial = PastHistory::zero(1, 0.01, 10).unwrap();
    let a = kb_average(&spec, &initial, 25.0, 0.01, 11, 2000, SamplingMode::UniformTime).unwrap();
    let b = kb_average(&spec, &initial, 25.0, 0.01, 12, 2000, SamplingMode::UniformTime).unwrap();
    let floor = w1_distance(&a, &b, 1, 5).unwrap();
    assert!(
        floor <= 0.1,
        "independent 2000-sample clouds should agree within 0.1, got {floor}"
    );
}

/// Averaged laws approach the OU stationary Gaussian as the horizon grows.
#[test]
fn kb_clouds_approach_the_stationary_gaussian_as_the_horizon_grows() {
    let spec = DriftSpec::ou(1.0, 1).unwrap();
    let initial = PastHistory::zero(1, 0.01, 10).unwrap();
    let covariance = DMatrix::from_element(1, 1, 0.5);
    let reference = gaussian_cloud(&[0.0], &covariance, 4000, 99).unwrap();

    let short = kb_average(&spec, &initial, 0.3, 0.01, 21, 2000, SamplingMode::UniformTime)
        .unwrap();
    let long = kb_average(&spec, &initial, 50.0, 0.01, 21, 2000, SamplingMode::UniformTime)
        .unwrap();
    let d_short = w1_distance(&short, &reference, 1, 5).unwrap();
    let d_long = w1_distance(&long, &reference, 1, 5).unwrap();
    assert!(
        d_long <= 0.1,
        "converged cloud must sit at the noise floor, got {d_long}"
    );
    assert!(
        d_short > 2.0 * d_long,
        "a horizon of 0.3 has not mixed yet: {d_short} vs {d_long}"
    );
}

/// At a long horizon the uniform-time average and the terminal law agree:
/// the law of X(t) has stopped moving.
#[test]
fn terminal_and_uniform_sampling_agree_at_long_horizons() {
    let spec = DriftSpec::ou(1.0, 1).unwrap();
    let initial = PastHistory::zero(1, 0.01, 10).unwrap();
    let uniform =
        kb_average(&spec, &initial, 50.0, 0.01, 31, 1200, SamplingMode::UniformTime).unwrap();
    let terminal =
        kb_average(&spec, &initial, 50.0, 0.01, 32, 1200, SamplingMode::Terminal).unwrap();
    let gap = w1_distance(&uniform, &terminal, 1, 5).unwrap();
    assert!(gap <= 0.1, "sampling modes disagree by {gap}");
}

/// The dissipativity cap `M* = (2 C1 + 1) / (2 C2)` dominates the measured
/// second moment for the memory drift, and OU(b = 1) attains its cap 0.5.
#[test]
fn second_moment_cap_holds_and_is_tight_for_ou() {
    let initial = PastHistory::zero(1, 0.01, 10).unwrap();

    let md = DriftSpec::modulated_damping(1.0, 0.5, 1.0, 1).unwrap();
    let cloud = kb_average(&md, &initial, 30.0, 0.01, 41, 800, SamplingMode::UniformTime).unwrap();
    let report = moment_bound_check(&cloud, 0.0, 0.5).unwrap();
    assert!(
        report.passed(),
        "measured {} must stay below the cap {} (+3 SE)",
        report.measured,
        report.bound
    );

    let ou = DriftSpec::ou(1.0, 1).unwrap();
    let cloud = kb_average(&ou, &initial, 30.0, 0.01, 42, 4000, SamplingMode::UniformTime).unwrap();
    let measured: f64 = cloud.second_moment();
    assert!(
        (measured - 0.5).abs() <= 0.05,
        "OU cap 1/(2b) = 0.5 is attained, measured {measured}"
    );
}

/// Chebyshev-type exceedance bound for one-step increments, checked on an
/// OU ensemble over a grid of thresholds and lags.
#[test]
fn increment_tail_bound_holds_across_thresholds_and_lags() {
    let spec = DriftSpec::ou(1.0, 1).unwrap();
    let initial = PastHistory::zero(1, 0.01, 10).unwrap();
    let ensemble = simulate_ensemble(&spec, &initial, 3.0, 0.01, 51, 2000, None).unwrap();
    for z in [0.5, 1.0, 2.0] {
        for delta in [0.05, 0.1] {
            let report = increment_tail_check(&ensemble, 2.0, 2.0 + delta, z, 1.0, 0.5).unwrap();
            assert!(
                report.passed(),
                "z = {z}, delta = {delta}: frequency {} exceeds bound {}",
                report.measured,
                report.bound
            );
        }
    }
}

/// Wiener paths stay inside `4 n^{0.55}` essentially always, while a path
/// with exponential growth is flagged.
#[test]
fn growth_envelope_accepts_wiener_paths_and_flags_exponential_ones() {
    let spec = DriftSpec::zero(1);
    let initial = PastHistory::zero(1, 0.01, 10).unwrap();

    let mut windows = 0usize;
    let mut violations = 0usize;
    for seed in 0..10 {
        let path = simulate(&spec, &initial, 100.0, 0.01, 61 + seed, 0, None).unwrap();
        let report = growth_diagnostic(&path, 4.0, 0.1, 0.05).unwrap();
        windows += report.windows.len();
        violations += report.violations.len();
    }
    let fraction = violations as f64 / windows as f64;
    assert!(
        fraction <= 0.01,
        "Wiener violation fraction {fraction} exceeds 1% over {windows} windows"
    );

    // a deterministic path 0.1 (e^{t/4} - 1), fed in through the increments,
    // escapes every sub-exponential envelope
    let dt = 0.01;
    let f = |t: f64| 0.1 * (0.25 * t).exp();
    let increments: Vec<Vec<f64>> = (0..4000)
        .map(|k| vec![f(dt * (k + 1) as f64) - f(dt * k as f64)])
        .collect();
    let exponential = simulate_with_increments(&spec, &initial, dt, &increments, None).unwrap();
    let report = growth_diagnostic(&exponential, 4.0, 0.1, 0.05).unwrap();
    assert!(
        report.flagged,
        "exponential growth must violate the envelope"
    );
    assert!(
        *report.trend.last().unwrap() > 1.0,
        "the trend statistic keeps growing for exponential paths"
    );
}
