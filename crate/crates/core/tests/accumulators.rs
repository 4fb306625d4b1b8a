//! Cross-checks of the O(1) kernel accumulators against brute-force
//! quadrature and closed forms.
//!
//! The accumulators advance by exact exponential decay plus a trapezoid
//! segment; the reference rebuilds every weight from scratch over the full
//! stored path.  The two only share the trapezoid rule itself, so agreement
//! at every probed node certifies the incremental bookkeeping.

use memsde_core::drift::DriftSpec;
use memsde_core::history::quadrature::{kernel_integral_reference, richardson_trapezoid};
use memsde_core::history::{ExpTerm, PastHistory, TailModel, Transform};
use memsde_core::integrate::simulate;
use memsde_core::Error;
use proptest::prelude::*;

/// Kernel probes registered on top of whatever the drift itself needs.
/// Rates are chosen off the family rates so nothing collides.
fn probe_kernels(include_norm: bool) -> Vec<(f64, Transform)> {
    let mut probes = vec![
        (1.3, Transform::Identity),
        (0.6, Transform::Coordinate(0)),
    ];
    if include_norm {
        probes.push((0.7, Transform::Norm));
    }
    probes
}

/// Drives one trajectory of `spec`, replays it into a history carrying the
/// probe kernels, and compares every accumulator against the reference
/// quadrature over the explicitly stored path at every 100th node.
///
/// The initial past must be constant (possibly zero): its tail model then
/// stays valid verbatim as time elapses, so the reference integral describes
/// the true path with no re-anchoring.
fn replay_against_reference(spec: &DriftSpec<f64>, constant: f64, horizon: f64, dt: f64) {
    let dim = spec.dim();
    let window_steps = 300;
    let level = vec![constant; dim];
    let initial = PastHistory::constant(&level, dt, window_steps).unwrap();

    let traj = simulate(spec, &initial, horizon, dt, 417, 0, None).unwrap();

    let mut history = initial.clone();
    spec.register_kernels(&mut history).unwrap();
    let mut kernels = probe_kernels(constant == 0.0);
    for &(rate, transform) in &kernels {
        history.register_kernel(rate, transform).unwrap();
    }
    for (rate, transform) in spec.required_kernels() {
        if !kernels.contains(&(rate, transform)) {
            kernels.push((rate, transform));
        }
    }

    // explicit path storage: the initial window samples, then every pushed
    // state, oldest first
    let mut stored: Vec<f64> = (0..history.window_len())
        .flat_map(|k| history.sample(k))
        .collect();
    let tail = if constant == 0.0 {
        TailModel::Zero
    } else {
        TailModel::Exponential {
            terms: vec![ExpTerm::new(level.clone(), 0.0)],
        }
    };

    for k in 1..=traj.steps() {
        history.push_sample(dt, traj.x_at(k)).unwrap();
        stored.extend_from_slice(traj.x_at(k));
        if !(k % 100 == 0 || k == traj.steps()) {
            continue;
        }
        let span = dt * (stored.len() / dim - 1) as f64;
        let tolerance = 10.0 * dt * dt * span.max(1.0);
        for &(rate, transform) in &kernels {
            // Norm has no closed form over a nonzero tail; the zero-past runs
            // cover it instead
            if transform == Transform::Norm && !tail.terms().is_empty() {
                continue;
            }
            let live = history.kernel_integral(rate, transform).unwrap();
            let reference =
                kernel_integral_reference(dim, dt, &stored, rate, transform, &tail).unwrap();
            for (j, (a, b)) in live.iter().zip(&reference).enumerate() {
                assert!(
                    (a - b).abs() <= tolerance,
                    "{} node {k} kernel (rate {rate}, {transform:?}) output {j}: \
                     accumulator {a} vs reference {b}, tolerance {tolerance:.3e}",
                    spec.label(),
                );
            }
        }
    }
}

#[test]
fn accumulators_track_reference_quadrature_for_ou_paths() {
    let spec = DriftSpec::ou(1.0, 1).unwrap();
    replay_against_reference(&spec, 0.0, 10.0, 0.01);
    replay_against_reference(&spec, 0.8, 10.0, 0.01);
}

#[test]
fn accumulators_track_reference_quadrature_for_modulated_damping_paths() {
    let spec = DriftSpec::modulated_damping(1.0, 0.5, 1.0, 1).unwrap();
    replay_against_reference(&spec, 0.0, 10.0, 0.01);
    replay_against_reference(&spec, -0.6, 10.0, 0.01);
}

#[test]
fn accumulators_track_reference_quadrature_for_distributed_delay_paths() {
    let spec = DriftSpec::linear_distributed_delay(1.0, 0.3, 1.0, 1).unwrap();
    replay_against_reference(&spec, 0.0, 10.0, 0.01);
    replay_against_reference(&spec, 0.5, 10.0, 0.01);
}

#[test]
fn accumulators_track_reference_quadrature_in_three_dimensions() {
    let spec = DriftSpec::linear_distributed_delay(1.0, 0.3, 1.0, 3).unwrap();
    replay_against_reference(&spec, 0.0, 5.0, 0.01);
    replay_against_reference(&spec, 0.4, 5.0, 0.01);
}

/// A sine path pushed on top of a sine window has the exact weighted
/// integral `F(0) - F(-span)` with
/// `F(s) = e^{rate s} (rate sin(s + T) - cos(s + T)) / (rate^2 + 1)`.
#[test]
fn pushed_sine_path_matches_closed_form_and_richardson_quadrature() {
    let dt = 0.005;
    let rate = 0.8;
    let window_steps = 600; // window [-3, 0]
    let pushed_steps = 400; // grows the span to [-5, 0]

    let samples: Vec<f64> = (0..=window_steps)
        .map(|k| (-dt * (window_steps - k) as f64).sin())
        .collect();
    let mut history = PastHistory::from_window(1, dt, samples, TailModel::Zero).unwrap();
    history.register_kernel(rate, Transform::Identity).unwrap();
    for k in 1..=pushed_steps {
        history.push_sample(dt, &[(dt * k as f64).sin()]).unwrap();
    }

    // relative to the final origin the path is sin(s + T) on [-span, 0]
    let shift = dt * pushed_steps as f64;
    let span = dt * (window_steps + pushed_steps) as f64;
    let antiderivative = |s: f64| {
        (rate * s).exp() * (rate * (s + shift).sin() - (s + shift).cos()) / (rate * rate + 1.0)
    };
    let exact = antiderivative(0.0) - antiderivative(-span);
    let richardson = richardson_trapezoid(
        |s| (rate * s).exp() * (s + shift).sin(),
        -span,
        0.0,
        2048,
    );
    assert!(
        (exact - richardson).abs() < 1e-10,
        "the two oracles disagree: closed form {exact} vs Richardson {richardson}"
    );

    let live = history
        .kernel_integral_scalar(rate, Transform::Identity)
        .unwrap();
    let tolerance = 10.0 * dt * dt * span;
    assert!(
        (live - exact).abs() <= tolerance,
        "accumulator {live} vs closed form {exact}, tolerance {tolerance:.3e}"
    );
}

#[test]
fn regrid_preserves_closed_form_integrals_and_rejects_pushed_histories() {
    let dt = 0.01;
    let mut history = PastHistory::<f64>::exponential(&[0.3], 0.4, dt, 1200).unwrap();
    history.register_kernel(1.0, Transform::Identity).unwrap();
    // integral of 0.3 e^{0.4|s|} e^{s} over s <= 0 is 0.3 / 0.6
    let coarse = history
        .kernel_integral_scalar(1.0, Transform::Identity)
        .unwrap();
    assert!((coarse - 0.5).abs() < 1e-14, "closed form init, got {coarse}");

    let fine = history.regrid(0.002).unwrap();
    assert_eq!(fine.grid_step(), 0.002);
    assert!((fine.window_seconds() - history.window_seconds()).abs() < 1e-9);
    let refined = fine
        .kernel_integral_scalar(1.0, Transform::Identity)
        .unwrap();
    assert!(
        (refined - coarse).abs() < 1e-14,
        "regrid must not disturb closed-form accumulators: {coarse} vs {refined}"
    );

    let mut pushed = history.clone();
    pushed.push_sample(dt, &[0.31]).unwrap();
    assert!(
        matches!(pushed.regrid(0.002), Err(Error::NoClosedForm { .. })),
        "a pushed window has no closed form to resample from"
    );
}

proptest! {
    /// Arbitrary push sequences into a constant past: the accumulator and the
    /// reference quadrature stay within the trapezoid-consistency tolerance
    /// (the pushed segment is arithmetically identical in both; only the
    /// closed-form window initialisation differs, by O(dt^2) per unit).
    #[test]
    fn accumulator_tracks_reference_for_random_push_sequences(
        constant in -2.0..2.0f64,
        rate in 0.3..2.0f64,
        dt in 0.005..0.05f64,
        values in prop::collection::vec(-5.0..5.0f64, 1..160),
    ) {
        let window_steps = 50;
        let mut history = PastHistory::constant(&[constant], dt, window_steps).unwrap();
        history.register_kernel(rate, Transform::Identity).unwrap();

        let mut stored: Vec<f64> = (0..history.window_len())
            .flat_map(|k| history.sample(k))
            .collect();
        for v in &values {
            history.push_sample(dt, &[*v]).unwrap();
            stored.push(*v);
        }

        let tail = TailModel::Exponential {
            terms: vec![ExpTerm::new(vec![constant], 0.0)],
        };
        let live = history.kernel_integral_scalar(rate, Transform::Identity).unwrap();
        let reference =
            kernel_integral_reference(1, dt, &stored, rate, Transform::Identity, &tail)
                .unwrap()[0];
        let span = dt * (stored.len() - 1) as f64;
        let tolerance = 10.0 * dt * dt * span.max(1.0);
        prop_assert!(
            (live - reference).abs() <= tolerance,
            "accumulator {} vs reference {} after {} pushes (tolerance {:.3e})",
            live, reference, values.len(), tolerance
        );
    }

    /// Window bookkeeping invariants under arbitrary pushes.
    #[test]
    fn pushes_slide_the_window_without_resizing_it(
        dt in 0.01..0.05f64,
        values in prop::collection::vec(-3.0..3.0f64, 1..60),
    ) {
        let mut history = PastHistory::zero(1, dt, 20).unwrap();
        let nodes = history.window_len();
        for (i, v) in values.iter().enumerate() {
            history.push_sample(dt, &[*v]).unwrap();
            prop_assert_eq!(history.window_len(), nodes, "window length must not change");
            prop_assert_eq!(history.pushes(), (i + 1) as u64);
            prop_assert_eq!(history.current(), &[*v], "current follows the last push");
        }
        // the newest window slot mirrors `current`
        prop_assert_eq!(
            history.sample(nodes - 1),
            history.current().to_vec(),
            "window head and current state must agree"
        );
    }
}
