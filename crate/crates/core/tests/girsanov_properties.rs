//! Change-of-measure checks against independent reconstructions: every
//! discrepancy node must be reproducible from scratch out of the stored
//! path, and the aggregated report must satisfy the envelope, Novikov and
//! martingale bounds simultaneously.

use memsde_core::drift::DriftSpec;
use memsde_core::girsanov::{
    drift_discrepancy, girsanov_report, log_rn_density, SeparationEnvelope,
};
use memsde_core::history::{ExpTerm, PastHistory, TailModel};

fn md_spec() -> DriftSpec<f64> {
    DriftSpec::modulated_damping(1.0, 0.5, 1.0, 1).unwrap()
}

/// Pasts with equal endpoints whose difference is `0.1 (e^{0.5|s|} - 1)`.
fn separated_pasts(dt: f64, window_steps: usize) -> (PastHistory<f64>, PastHistory<f64>) {
    let x = PastHistory::zero(1, dt, window_steps).unwrap();
    let y = PastHistory::analytic(
        1,
        dt,
        window_steps,
        vec![
            ExpTerm::new(vec![0.1], 0.5),
            ExpTerm::new(vec![-0.1], 0.0),
        ],
    )
    .unwrap();
    (x, y)
}

/// Rebuilds both histories at a chosen node from raw samples plus a decayed
/// tail description, re-evaluates the two drifts through fresh quadrature,
/// and compares against the profile produced by the O(1) replay.
#[test]
fn discrepancy_nodes_match_a_brute_force_requadrature()
{
    let spec = md_spec();
    let dt = 0.01;
    let window_steps = 40;
    let (x, y) = separated_pasts(dt, window_steps);
    let (profile, trajectory) = drift_discrepancy(&spec, &x, &y, 1.0, dt, 7, 3).unwrap();

    for &node in &[0usize, 17, 50, 99] {
        let elapsed = dt * node as f64;

        // raw path of the x side: zeros on the window, then the realised path
        let mut x_samples = vec![0.0f64; window_steps + 1];
        for k in 1..=node {
            x_samples.push(trajectory.x_at(k)[0]);
        }
        // raw path of the y side: the analytic window, then the same path
        let mut y_samples: Vec<f64> = (0..=window_steps)
            .map(|k| {
                let s = -dt * (window_steps - k) as f64;
                0.1 * (-0.5 * s).exp() + (-0.1)
            })
            .collect();
        for k in 1..=node {
            y_samples.push(trajectory.x_at(k)[0]);
        }

        // the tails, re-anchored at the current time: an exponential term of
        // rate r seen from `elapsed` seconds later carries e^{-r elapsed}
        let x_tail = TailModel::Zero;
        let y_tail = TailModel::Exponential {
            terms: vec![
                ExpTerm::new(vec![0.1 * (-0.5 * elapsed).exp()], 0.5),
                ExpTerm::new(vec![-0.1], 0.0),
            ],
        };

        let mut hx = PastHistory::from_window(1, dt, x_samples, x_tail).unwrap();
        let mut hy = PastHistory::from_window(1, dt, y_samples, y_tail).unwrap();
        spec.register_kernels(&mut hx).unwrap();
        spec.register_kernels(&mut hy).unwrap();
        let delta = spec.evaluate(&hy).unwrap()[0] - spec.evaluate(&hx).unwrap()[0];

        let live = profile.delta_at(node)[0];
        let state = trajectory.x_at(node)[0].abs();
        let tolerance = 1e-6 * (1.0 + state);
        assert!(
            (delta - live).abs() <= tolerance,
            "node {node}: requadrature {delta} vs replay {live} (tolerance {tolerance:.3e})"
        );
    }
}

/// The log-density must equal the literal discrete Girsanov sum over the
/// stored profile and increments, term by term.
#[test]
fn log_density_equals_the_literal_girsanov_sum() {
    let spec = md_spec();
    let (x, y) = separated_pasts(0.01, 40);
    let (profile, trajectory) = drift_discrepancy(&spec, &x, &y, 2.0, 0.01, 13, 1).unwrap();

    let mut expected = 0.0f64;
    for k in 0..profile.len() {
        let delta = profile.delta_at(k)[0];
        let dw = trajectory.increment(k)[0];
        expected += delta * dw - 0.5 * delta * delta * profile.dt();
    }
    let live = log_rn_density(&profile, &trajectory).unwrap();
    assert_eq!(live, expected, "the density sum must be reproducible bitwise");
}

/// Aggregated report at rehearsal size: envelope, Novikov and martingale
/// statements hold together on one set of replicas.
#[test]
fn report_satisfies_envelope_novikov_and_martingale_bounds() {
    let spec = md_spec();
    let (x, y) = separated_pasts(0.01, 40);
    // K at the audited radius 4, K' = 0.1, lambda = 1, lambda' = 0.5
    let envelope = SeparationEnvelope::new(2.0, 0.1, 1.0, 0.5).unwrap();
    assert!(envelope.dominates(&x, &y).unwrap());

    let report = girsanov_report(&spec, &x, &y, &envelope, 2.0, 0.01, 2025, 1500).unwrap();
    assert!(
        report.sup_state_norm < 4.0,
        "the Lipschitz radius audit failed: sup |X| = {}",
        report.sup_state_norm
    );
    assert!(
        report.envelope_ok(1.01),
        "discrepancy exceeds L e^{{-lambda t}}: sup ratio {}",
        report.sup_ratio
    );
    assert!(
        report.novikov_ok(1e-6),
        "Novikov integral {} exceeds the bound {}",
        report.novikov_empirical_max,
        report.novikov_bound
    );
    assert!(
        report.martingale_ok(),
        "mean density {} +- {} strays from 1",
        report.density_mean,
        report.density_se
    );
    // the truncation tail at T = 2 is the closed form L^2 e^{-2 lambda T} / (4 lambda)
    let expected_tail = report.novikov_bound * (-4.0f64).exp();
    assert!(
        (report.novikov_tail - expected_tail).abs() <= 1e-12 * expected_tail,
        "tail {} vs closed form {expected_tail}",
        report.novikov_tail
    );
}

/// The discrepancy fades as the disagreement between the pasts retreats into
/// the kernel tail.  The envelope `L e^{-lambda t}` decays by e^{-2} between
/// the compared windows; the realised state grows from the shared zero
/// endpoint, so the profile itself is only required to halve.
#[test]
fn discrepancy_decays_at_the_kernel_rate() {
    let spec = md_spec();
    let (x, y) = separated_pasts(0.01, 40);
    let (profile, trajectory) = drift_discrepancy(&spec, &x, &y, 3.0, 0.01, 19, 0).unwrap();
    let norms = profile.norms();
    let early: f64 = norms[0..50].iter().sum();
    let late: f64 = norms[200..250].iter().sum();
    assert!(
        late < 0.5 * early,
        "memory of the separated pasts must fade: early {early}, late {late}"
    );
    // and pointwise the theorem's bound holds with the audited radius
    let envelope = SeparationEnvelope::new(0.5 * trajectory.sup_norm().ceil(), 0.1, 1.0, 0.5)
        .unwrap();
    let ratio = profile.sup_envelope_ratio(&envelope);
    assert!(
        ratio <= 1.01,
        "profile escapes the envelope: sup ratio {ratio}"
    );
}
