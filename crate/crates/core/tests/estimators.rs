//! Oracle tests for the condition estimators: families with hand-computable
//! Lipschitz, dissipativity and growth constants must be measured at those
//! constants — from below by near-extremal probes, never above by more than
//! the consistency tolerance.

use memsde_core::drift::estimate::{
    condition_report, estimate_dissipativity, estimate_growth, estimate_lipschitz, SamplerConfig,
};
use memsde_core::drift::DriftSpec;

fn md(b: f64, epsilon: f64, lambda: f64) -> DriftSpec<f64> {
    DriftSpec::modulated_damping(b, epsilon, lambda, 1).unwrap()
}

/// ModulatedDamping with equal endpoints: `|a(x) - a(y)| = b eps |x(0)|
/// |tanh(M_x) - tanh(M_y)| <= b eps lambda R * integral e^{lambda s}|x - y|`,
/// so the constant is `b eps lambda R`.  Spike pairs with a flat memory and
/// a full-radius endpoint drive `tanh'` to 1 and nearly attain it.
#[test]
fn modulated_damping_lipschitz_stays_below_declared_and_is_nearly_attained() {
    let spec = md(1.0, 0.5, 1.0);
    let declared = 0.5; // b * eps * lambda * R at R = 1
    let est = estimate_lipschitz(&spec, 1.0, Some(declared), &SamplerConfig::new()).unwrap();
    assert!(
        est.excess.unwrap() <= 1e-9,
        "measured constant {} exceeds the declared {declared}",
        est.k_hat
    );
    assert!(
        est.k_hat >= 0.45,
        "spike pairs should get within 10% of {declared}, got {}",
        est.k_hat
    );
}

/// LinearDistributedDelay is affine in the past, so equal-endpoint pairs give
/// `|a(x) - a(y)| = |kappa| lambda |integral e^{lambda s}(x - y)|`.  A
/// one-signed difference turns the inequality into an identity: the estimate
/// equals `|kappa| lambda` to roundoff because numerator and denominator use
/// the same trapezoid weights.
#[test]
fn distributed_delay_lipschitz_equals_kappa_lambda_exactly() {
    let spec = DriftSpec::<f64>::linear_distributed_delay(1.0, 0.3, 1.0, 1).unwrap();
    let est = estimate_lipschitz(&spec, 1.0, Some(0.3), &SamplerConfig::new()).unwrap();
    assert!(
        (est.k_hat - 0.3).abs() <= 1e-12,
        "one-signed spike pairs make the bound sharp, got {}",
        est.k_hat
    );
    assert!(est.excess.unwrap() <= 1e-9);
}

/// The ModulatedDamping constant scales with the endpoint radius.
#[test]
fn lipschitz_estimate_scales_with_the_endpoint_radius() {
    let spec = md(1.0, 0.5, 1.0);
    let config = SamplerConfig::new();
    let at_one = estimate_lipschitz(&spec, 1.0, Some(0.5), &config).unwrap();
    let at_two = estimate_lipschitz(&spec, 2.0, Some(1.0), &config).unwrap();
    assert!(
        at_two.k_hat > 1.5 * at_one.k_hat,
        "doubling the radius should nearly double the constant: {} vs {}",
        at_one.k_hat,
        at_two.k_hat
    );
    assert!(at_two.excess.unwrap() <= 1e-9);
}

/// Every witness must reproduce its stored statistic bitwise when
/// re-evaluated from the stored window alone.
#[test]
fn witnesses_reevaluate_bitwise() {
    let spec = md(1.0, 0.5, 1.0);
    let config = SamplerConfig::quick();

    let lip = estimate_lipschitz(&spec, 1.0, Some(0.5), &config).unwrap();
    let witness = lip.witness.expect("a maximising pair exists");
    assert_eq!(
        witness.reevaluate(&spec).unwrap(),
        witness.ratio,
        "the Lipschitz witness must be self-contained"
    );

    let dis = estimate_dissipativity(&spec, 1.0, Some((0.0, 0.5)), &config).unwrap();
    let witness = dis.witness.expect("a binding probe exists");
    assert_eq!(
        witness.reevaluate(&spec).unwrap(),
        witness.value,
        "the dissipativity witness must be self-contained"
    );

    let gro = estimate_growth(&spec, 1.0, Some(1.5), &config).unwrap();
    let witness = gro.witness.expect("a binding probe exists");
    assert_eq!(
        witness.reevaluate(&spec).unwrap(),
        witness.value,
        "the growth witness must be self-contained"
    );
}

/// ModulatedDamping satisfies `(a(x), x(0)) <= -b(1 - eps)|x(0)|^2`: the
/// constant probes at deeply negative memory push `1 + eps tanh` down to
/// `1 - eps`, so the fitted decay approaches `b(1 - eps)` from above.
#[test]
fn modulated_damping_dissipativity_attains_the_declared_envelope() {
    let spec = md(1.0, 0.5, 1.0);
    let est = estimate_dissipativity(&spec, 1.0, Some((0.0, 0.5)), &SamplerConfig::new()).unwrap();
    assert!(!est.violated);
    assert_eq!(est.c1_hat, 0.0, "damping never pushes outward");
    let c2 = est.c2_hat.expect("constant probes have nonzero endpoints");
    assert!(
        c2 >= 0.5 && c2 - 0.5 <= 1e-8,
        "fitted decay must sit just above b(1 - eps) = 0.5, got {c2}"
    );
    assert!(est.excess.unwrap() <= 1e-9);
}

/// Growth: `|a(x)| = b(1 + eps tanh(M))|x(0)| <= b(1 + eps)|x(0)|`, attained
/// as the constant level saturates the tanh.
#[test]
fn modulated_damping_growth_attains_the_declared_constant() {
    let spec = md(1.0, 0.5, 1.0);
    let est = estimate_growth(&spec, 1.0, Some(1.5), &SamplerConfig::new()).unwrap();
    assert!(!est.violated);
    assert!(
        (est.c3_hat - 1.5).abs() <= 1e-8,
        "saturated probes attain b(1 + eps) = 1.5, got {}",
        est.c3_hat
    );
    assert!(est.excess.unwrap() <= 1e-9);
}

/// The full report for OU: all three conditions hold with the declared
/// constants (K = 0, (C1, C2) = (0, b), C3 = b).
#[test]
fn ou_condition_report_holds_at_full_campaign_size() {
    let spec = DriftSpec::ou(0.5, 1).unwrap();
    let report = condition_report(&spec, 1.0, &SamplerConfig::new()).unwrap();
    assert!(
        report.all_hold(),
        "OU satisfies every condition: {:?}",
        report.failures()
    );
    assert_eq!(report.lipschitz.k_hat, 0.0);
    assert!(report.growth.excess.unwrap() <= 1e-9);
}

/// The negative control: LinearDistributedDelay's memory term is unbounded
/// relative to `|x(0)|`, so the divergence ladder must prove both the
/// dissipativity and the growth condition false — while its Lipschitz
/// constant (which does hold) stays within the declared value.
#[test]
fn distributed_delay_report_flags_dissipativity_and_growth() {
    let spec = DriftSpec::linear_distributed_delay(1.0, 0.3, 1.0, 1).unwrap();
    let report = condition_report(&spec, 1.0, &SamplerConfig::new()).unwrap();
    assert!(!report.all_hold());
    assert!(
        report.dissipativity.violated,
        "memory-amplified probes must beat every candidate envelope"
    );
    assert!(
        report.growth.violated,
        "a zero-endpoint past with nonzero memory exposes the missing bound"
    );
    assert!(
        report.lipschitz.excess.unwrap() <= 1e-9,
        "the Lipschitz condition genuinely holds for the negative control"
    );
    assert_eq!(
        report.failures().len(),
        2,
        "exactly the two memory-driven conditions fail: {:?}",
        report.failures()
    );
}
