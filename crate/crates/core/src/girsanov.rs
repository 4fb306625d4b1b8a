//! Change of measure between solutions started from different pasts, and
//! shared-noise couplings.
//!
//! Two histories with equal endpoints and separation
//! `|x(s) - y(s)| <= K' e^{lambda' |s|}` (with `lambda' < lambda`) are driven
//! by one realised future.  The drift discrepancy then decays like
//!
//! ```text
//!     |a(pi_t X~) - a(pi_t X)| <= L e^{-lambda t},
//!     L = K K' / (lambda - lambda'),
//! ```
//!
//! because the only disagreement between the two pasts retreats into the
//! exponentially weighted tail of the memory kernel.  The induced
//! Radon-Nikodym density between the two path laws is
//!
//! ```text
//!     rho = exp( sum <delta_k, dW_k>  -  1/2 sum |delta_k|^2 dt ),
//! ```
//!
//! a true martingale whenever the Novikov integral
//! `1/2 integral |delta|^2 dt <= L^2 / (4 lambda)` is finite; in the
//! discrete model `E rho = 1` holds exactly, which the Monte Carlo
//! martingale test verifies.
//!
//! The coupling side runs two solutions with identical Wiener increments
//! and different pasts, and compares ergodic averages of a bounded path
//! functional against the statistical fluctuation of a single average.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drift::DriftSpec;
use crate::error::{Error, Result};
use crate::history::{PastHistory, TailModel};
use crate::integrate::{simulate, simulate_with_increments, steps_for, Trajectory};
use crate::noise::NoiseStream;
use crate::real::Real;

/// Declared separation of two pasts: `|x(s) - y(s)| <= amplitude *
/// e^{separation_rate |s|}`, verified against a memory kernel of rate
/// `kernel_rate` and drift Lipschitz constant `lipschitz_k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationEnvelope<T> {
    pub lipschitz_k: T,
    /// `K'`: separation amplitude.
    pub amplitude: T,
    /// `lambda`: decay rate of the drift's memory kernel.
    pub kernel_rate: T,
    /// `lambda'`: growth rate of the past separation, strictly below
    /// `kernel_rate`.
    pub separation_rate: T,
}

impl<T: Real> SeparationEnvelope<T> {
    pub fn new(lipschitz_k: T, amplitude: T, kernel_rate: T, separation_rate: T) -> Result<Self> {
        if !lipschitz_k.is_finite() || lipschitz_k < T::zero() {
            return Err(Error::Invalid {
                context: "separation envelope",
                reason: "the Lipschitz constant must be finite and nonnegative".into(),
            });
        }
        if !amplitude.is_finite() || amplitude <= T::zero() {
            return Err(Error::Invalid {
                context: "separation envelope",
                reason: "the separation amplitude must be finite and positive".into(),
            });
        }
        if !separation_rate.is_finite() || separation_rate <= T::zero() {
            return Err(Error::Invalid {
                context: "separation envelope",
                reason: "the separation rate must be finite and positive".into(),
            });
        }
        if !kernel_rate.is_finite() || kernel_rate <= separation_rate {
            return Err(Error::TailRateTooLarge {
                tail_rate: separation_rate.as_f64(),
                kernel_rate: kernel_rate.as_f64(),
            });
        }
        Ok(Self {
            lipschitz_k,
            amplitude,
            kernel_rate,
            separation_rate,
        })
    }

    /// `L = K K' / (lambda - lambda')`.
    #[must_use]
    pub fn scale(&self) -> T {
        self.lipschitz_k * self.amplitude / (self.kernel_rate - self.separation_rate)
    }

    /// Envelope value `L e^{-lambda t}` at time `t >= 0`.
    #[must_use]
    pub fn at(&self, t: T) -> T {
        self.scale() * (-self.kernel_rate * t).exp()
    }

    /// Full Novikov bound `L^2 / (4 lambda)`.
    #[must_use]
    pub fn novikov_bound(&self) -> T {
        let l = self.scale();
        l * l / (T::of(4.0) * self.kernel_rate)
    }

    /// Novikov mass beyond a finite horizon: `L^2 e^{-2 lambda T} / (4 lambda)`.
    #[must_use]
    pub fn novikov_tail(&self, horizon: T) -> T {
        self.novikov_bound() * (-T::of(2.0) * self.kernel_rate * horizon).exp()
    }

    /// Checks that `|x(s) - y(s)| <= K' e^{lambda' |s|}` holds on the stored
    /// windows and for the analytic tails (all tail rates at most `lambda'`,
    /// asymptotic coefficient at most `K'`, dense samples in between).
    pub fn dominates(&self, x: &PastHistory<T>, y: &PastHistory<T>) -> Result<bool> {
        if x.dim() != y.dim() {
            return Err(Error::DimensionMismatch {
                expected: x.dim(),
                got: y.dim(),
            });
        }
        let slack = T::one() + T::of(1e-9);
        let nodes = x.window_len().min(y.window_len());
        for k in 0..nodes {
            let xk = x.sample(x.window_len() - 1 - k);
            let yk = y.sample(y.window_len() - 1 - k);
            let gap = xk
                .iter()
                .zip(&yk)
                .map(|(a, b)| (*a - *b) * (*a - *b))
                .sum::<T>()
                .sqrt();
            let s = x.grid_step() * T::of_usize(k);
            if gap > self.amplitude * (self.separation_rate * s).exp() * slack {
                return Ok(false);
            }
        }
        // combined tail difference: terms of x minus terms of y
        let mut terms: Vec<(Vec<T>, T)> = Vec::new();
        for (model, sign) in [(x.tail_model(), T::one()), (y.tail_model(), -T::one())] {
            if let TailModel::Exponential { terms: list } = model {
                for term in list {
                    terms.push((
                        term.amplitude.iter().map(|a| *a * sign).collect(),
                        term.rate,
                    ));
                }
            }
        }
        let mut asymptotic = vec![T::zero(); x.dim()];
        for (amp, rate) in &terms {
            if *rate > self.separation_rate + T::of(1e-12) {
                return Ok(false);
            }
            if (*rate - self.separation_rate).abs() <= T::of(1e-12) {
                for (j, a) in amp.iter().enumerate() {
                    asymptotic[j] += *a;
                }
            }
        }
        let asym_norm = asymptotic.iter().map(|v| *v * *v).sum::<T>().sqrt();
        if asym_norm > self.amplitude * slack {
            return Ok(false);
        }
        // dense check of the analytic region between window edge and asymptote
        let window_edge = x.window_seconds().max(y.window_seconds());
        for factor in [1.0, 1.5, 2.0, 3.0, 5.0, 8.0, 12.0, 20.0, 40.0] {
            let depth = (window_edge + T::one()) * T::of(factor);
            let mut value = vec![T::zero(); x.dim()];
            for (amp, rate) in &terms {
                let w = (*rate * depth).exp();
                for (j, a) in amp.iter().enumerate() {
                    value[j] += *a * w;
                }
            }
            let norm = value.iter().map(|v| *v * *v).sum::<T>().sqrt();
            if norm > self.amplitude * (self.separation_rate * depth).exp() * slack {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Vector drift discrepancies `delta_k = a(pi_k X~) - a(pi_k X)` along one
/// realised path, one entry per integration step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyProfile<T> {
    dim: usize,
    dt: T,
    deltas: Vec<T>,
}

impl<T: Real> DiscrepancyProfile<T> {
    #[must_use]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[must_use]
    pub fn dt(&self) -> T {
        self.dt
    }

    /// Number of steps covered.
    #[must_use]
    pub fn len(&self) -> usize {
        self.deltas.len() / self.dim
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    #[must_use]
    pub fn delta_at(&self, k: usize) -> &[T] {
        &self.deltas[k * self.dim..(k + 1) * self.dim]
    }

    #[must_use]
    pub fn norm_at(&self, k: usize) -> T {
        self.delta_at(k).iter().map(|v| *v * *v).sum::<T>().sqrt()
    }

    #[must_use]
    pub fn norms(&self) -> Vec<T> {
        (0..self.len()).map(|k| self.norm_at(k)).collect()
    }

    /// `1/2 sum |delta_k|^2 dt`: the truncated Novikov integral.
    #[must_use]
    pub fn novikov_integral(&self) -> T {
        let half = T::of(0.5);
        (0..self.len())
            .map(|k| {
                let n = self.norm_at(k);
                half * n * n * self.dt
            })
            .sum()
    }

    /// Largest ratio `|delta_k| / envelope(t_k)` along the profile.
    #[must_use]
    pub fn sup_envelope_ratio(&self, envelope: &SeparationEnvelope<T>) -> T {
        (0..self.len()).fold(T::zero(), |m, k| {
            let t = self.dt * T::of_usize(k);
            m.max(self.norm_at(k) / envelope.at(t))
        })
    }
}

/// Runs one path from `past_x` and evaluates both drifts along it.
///
/// The two histories must agree at `s = 0` exactly: the comparison process
/// shares the realised future, so a mismatch at the junction would make it
/// discontinuous.  Returns the per-step discrepancies and the realised path.
pub fn drift_discrepancy<T: Real>(
    spec: &DriftSpec<T>,
    past_x: &PastHistory<T>,
    past_y: &PastHistory<T>,
    horizon: T,
    dt: T,
    seed: u64,
    stream: u64,
) -> Result<(DiscrepancyProfile<T>, Trajectory<T>)> {
    if past_x.dim() != past_y.dim() || past_x.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: past_x.dim().max(past_y.dim()),
        });
    }
    if past_x.current() != past_y.current() {
        return Err(Error::SpliceEndpointMismatch {
            past: past_x.current().iter().map(|v| v.as_f64()).collect(),
            future: past_y.current().iter().map(|v| v.as_f64()).collect(),
        });
    }
    let steps = steps_for(horizon, dt)?;
    let trajectory = simulate(spec, past_x, horizon, dt, seed, stream, None)?;
    let dim = spec.dim();
    let mut hx = past_x.clone();
    let mut hy = past_y.clone();
    spec.register_kernels(&mut hx)?;
    spec.register_kernels(&mut hy)?;
    let mut deltas = Vec::with_capacity(steps * dim);
    let mut ax = vec![T::zero(); dim];
    let mut ay = vec![T::zero(); dim];
    for k in 0..steps {
        spec.evaluate_into(&hx, &mut ax)?;
        spec.evaluate_into(&hy, &mut ay)?;
        for j in 0..dim {
            deltas.push(ay[j] - ax[j]);
        }
        let next = trajectory.x_at(k + 1);
        hx.push_sample(dt, next)?;
        hy.push_sample(dt, next)?;
    }
    Ok((DiscrepancyProfile { dim, dt, deltas }, trajectory))
}

/// Log Radon-Nikodym density of the `past_y` law against the `past_x` law
/// along the realised path: `sum <delta_k, dW_k> - 1/2 sum |delta_k|^2 dt`.
pub fn log_rn_density<T: Real>(
    profile: &DiscrepancyProfile<T>,
    trajectory: &Trajectory<T>,
) -> Result<T> {
    if profile.dim() != trajectory.dim() || profile.len() != trajectory.steps() {
        return Err(Error::GridMismatch {
            context: "discrepancy profile and trajectory must share the grid",
            expected: trajectory.steps() as f64,
            got: profile.len() as f64,
        });
    }
    let half = T::of(0.5);
    let mut log_density = T::zero();
    for k in 0..profile.len() {
        let delta = profile.delta_at(k);
        let dw = trajectory.increment(k);
        let mut inner = T::zero();
        let mut norm_sq = T::zero();
        for j in 0..profile.dim() {
            inner += delta[j] * dw[j];
            norm_sq += delta[j] * delta[j];
        }
        log_density += inner - half * norm_sq * profile.dt();
    }
    Ok(log_density)
}

/// `exp(log_rn_density)`.
pub fn density_sample<T: Real>(
    profile: &DiscrepancyProfile<T>,
    trajectory: &Trajectory<T>,
) -> Result<T> {
    Ok(log_rn_density(profile, trajectory)?.exp())
}

/// Monte Carlo summary of the change of measure between two pasts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GirsanovReport<T> {
    pub replicas: usize,
    pub horizon: T,
    pub envelope: SeparationEnvelope<T>,
    /// Largest `|delta_k| / (L e^{-lambda t_k})` over all replicas and nodes.
    pub sup_ratio: T,
    /// Largest realised `|X(t)|`, for auditing the Lipschitz radius.
    pub sup_state_norm: T,
    /// Largest truncated Novikov integral over the replicas.
    pub novikov_empirical_max: T,
    pub novikov_bound: T,
    pub novikov_tail: T,
    pub density_mean: T,
    pub density_se: T,
}

impl<T: Real> GirsanovReport<T> {
    /// Mean density within three standard errors of 1.
    #[must_use]
    pub fn martingale_ok(&self) -> bool {
        (self.density_mean - T::one()).abs() <= T::of(3.0) * self.density_se
    }

    /// Every discrepancy node below the envelope times `tol_factor`.
    #[must_use]
    pub fn envelope_ok(&self, tol_factor: T) -> bool {
        self.sup_ratio <= tol_factor
    }

    /// Truncated Novikov integrals below the full bound plus `slack`.
    #[must_use]
    pub fn novikov_ok(&self, slack: T) -> bool {
        self.novikov_empirical_max <= self.novikov_bound + slack
    }
}

/// Runs `replicas` discrepancy paths on streams `0..replicas` and
/// aggregates envelope ratios, Novikov integrals and density statistics.
#[allow(clippy::too_many_arguments)]
pub fn girsanov_report<T: Real>(
    spec: &DriftSpec<T>,
    past_x: &PastHistory<T>,
    past_y: &PastHistory<T>,
    envelope: &SeparationEnvelope<T>,
    horizon: T,
    dt: T,
    seed: u64,
    replicas: usize,
) -> Result<GirsanovReport<T>> {
    if replicas == 0 {
        return Err(Error::EmptySamples {
            context: "girsanov report needs at least one replica",
        });
    }
    let per_stream: Vec<(T, T, T, T)> = (0..replicas)
        .into_par_iter()
        .map(|r| -> Result<(T, T, T, T)> {
            let (profile, trajectory) =
                drift_discrepancy(spec, past_x, past_y, horizon, dt, seed, r as u64)?;
            let density = density_sample(&profile, &trajectory)?;
            Ok((
                density,
                profile.novikov_integral(),
                profile.sup_envelope_ratio(envelope),
                trajectory.sup_norm(),
            ))
        })
        .collect::<Result<_>>()?;
    let n = T::of_usize(replicas);
    let density_mean = per_stream.iter().map(|(d, _, _, _)| *d).sum::<T>() / n;
    let density_se = if replicas > 1 {
        let var = per_stream
            .iter()
            .map(|(d, _, _, _)| (*d - density_mean) * (*d - density_mean))
            .sum::<T>()
            / T::of_usize(replicas - 1);
        (var / n).sqrt()
    } else {
        T::of(f64::INFINITY)
    };
    let fold_max = |f: fn(&(T, T, T, T)) -> T| per_stream.iter().map(f).fold(T::zero(), T::max);
    Ok(GirsanovReport {
        replicas,
        horizon,
        envelope: *envelope,
        sup_ratio: fold_max(|t| t.2),
        sup_state_norm: fold_max(|t| t.3),
        novikov_empirical_max: fold_max(|t| t.1),
        novikov_bound: envelope.novikov_bound(),
        novikov_tail: envelope.novikov_tail(horizon),
        density_mean,
        density_se,
    })
}

// ---------------------------------------------------------------------------
// shared-noise coupling
// ---------------------------------------------------------------------------

/// Bounded path functional for ergodic averages: the moving average of the
/// first coordinate over `window` seconds, clamped to `[-clamp, clamp]`,
/// averaged over `t >= burn_in`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSpec<T> {
    pub window: T,
    pub clamp: T,
    pub burn_in: T,
}

impl<T: Real> FunctionalSpec<T> {
    pub fn validate(&self, horizon: T) -> Result<()> {
        if !self.window.is_finite() || self.window <= T::zero() {
            return Err(Error::Invalid {
                context: "functional",
                reason: "window must be finite and positive".into(),
            });
        }
        if !self.clamp.is_finite() || self.clamp <= T::zero() {
            return Err(Error::Invalid {
                context: "functional",
                reason: "clamp must be finite and positive".into(),
            });
        }
        if !self.burn_in.is_finite()
            || self.burn_in < T::zero()
            || self.burn_in + self.window >= horizon
        {
            return Err(Error::Invalid {
                context: "functional",
                reason: "burn-in plus window must leave room before the horizon".into(),
            });
        }
        Ok(())
    }
}

/// Time average of the clamped moving-average functional along a path.
pub fn ergodic_average<T: Real>(
    trajectory: &Trajectory<T>,
    functional: &FunctionalSpec<T>,
) -> Result<T> {
    functional.validate(trajectory.horizon())?;
    let dt = trajectory.dt();
    let window_steps = (functional.window / dt).round().to_usize().unwrap_or(1).max(1);
    let start = (functional.burn_in / dt)
        .round()
        .to_usize()
        .unwrap_or(0)
        .max(window_steps);
    let nodes = trajectory.nodes();
    if start >= nodes {
        return Err(Error::Invalid {
            context: "ergodic average",
            reason: "burn-in leaves no nodes to average".into(),
        });
    }
    // running sum of the first coordinate over the trailing window
    let mut window_sum = T::zero();
    for k in start - window_steps..start {
        window_sum += trajectory.x_at(k + 1)[0];
    }
    let w = T::of_usize(window_steps);
    let mut total = T::zero();
    let mut count = 0usize;
    for k in start..nodes {
        let value = (window_sum / w).min(functional.clamp).max(-functional.clamp);
        total += value;
        count += 1;
        if k + 1 < nodes {
            window_sum += trajectory.x_at(k + 1)[0] - trajectory.x_at(k + 1 - window_steps)[0];
        }
    }
    Ok(total / T::of_usize(count))
}

/// Shared-noise coupling of two pasts plus an independent-seed calibration
/// of the ergodic average's statistical spread.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport<T> {
    pub horizon: T,
    /// `|X_k - Y_k|` at every node of the coupled pair.
    pub gap_profile: Vec<T>,
    pub ergodic_x: T,
    pub ergodic_y: T,
    /// `|ergodic_x - ergodic_y|`.
    pub gap: T,
    /// Standard deviation of the same average across independent seeds.
    pub calibration_sd: T,
    pub calibration_replicas: usize,
    /// `gap <= 2 * calibration_sd`.
    pub within_calibration: bool,
}

/// Runs the coupled pair on stream 0 with identical increments, then
/// `calibration_replicas` independent runs from `past_x` on streams `1..`.
#[allow(clippy::too_many_arguments)]
pub fn couple<T: Real>(
    spec: &DriftSpec<T>,
    past_x: &PastHistory<T>,
    past_y: &PastHistory<T>,
    horizon: T,
    dt: T,
    seed: u64,
    functional: &FunctionalSpec<T>,
    calibration_replicas: usize,
) -> Result<CouplingReport<T>> {
    if calibration_replicas < 2 {
        return Err(Error::EmptySamples {
            context: "calibration needs at least two replicas",
        });
    }
    let steps = steps_for(horizon, dt)?;
    let noise = NoiseStream::<T>::new(seed, 0, spec.dim());
    let increments = noise.increments(0..steps as u64, dt);
    let tx = simulate_with_increments(spec, past_x, dt, &increments, None)?;
    let ty = simulate_with_increments(spec, past_y, dt, &increments, None)?;
    let gap_profile: Vec<T> = (0..tx.nodes())
        .map(|k| {
            tx.x_at(k)
                .iter()
                .zip(ty.x_at(k))
                .map(|(a, b)| (*a - *b) * (*a - *b))
                .sum::<T>()
                .sqrt()
        })
        .collect();
    let ergodic_x = ergodic_average(&tx, functional)?;
    let ergodic_y = ergodic_average(&ty, functional)?;
    let gap = (ergodic_x - ergodic_y).abs();

    let averages: Vec<T> = (1..=calibration_replicas)
        .into_par_iter()
        .map(|r| -> Result<T> {
            let t = simulate(spec, past_x, horizon, dt, seed, r as u64, None)?;
            ergodic_average(&t, functional)
        })
        .collect::<Result<_>>()?;
    let n = T::of_usize(averages.len());
    let mean = averages.iter().copied().sum::<T>() / n;
    let var = averages
        .iter()
        .map(|a| (*a - mean) * (*a - mean))
        .sum::<T>()
        / T::of_usize(averages.len() - 1);
    let calibration_sd = var.sqrt();

    Ok(CouplingReport {
        horizon,
        gap_profile,
        ergodic_x,
        ergodic_y,
        gap,
        calibration_sd,
        calibration_replicas,
        within_calibration: gap <= T::of(2.0) * calibration_sd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::ExpTerm;
    use approx::assert_relative_eq;

    fn md_spec() -> DriftSpec<f64> {
        DriftSpec::modulated_damping(1.0, 0.5, 1.0, 1).unwrap()
    }

    /// Pasts whose difference is `0.1 (e^{0.5|s|} - 1)`: equal endpoints,
    /// separation strictly below `0.1 e^{0.5|s|}`.
    fn separated_pasts(dt: f64) -> (PastHistory<f64>, PastHistory<f64>) {
        let x = PastHistory::zero(1, dt, 40).unwrap();
        let y = PastHistory::analytic(
            1,
            dt,
            40,
            vec![
                ExpTerm::new(vec![0.1], 0.5),
                ExpTerm::new(vec![-0.1], 0.0),
            ],
        )
        .unwrap();
        (x, y)
    }

    #[test]
    fn envelope_constants() {
        let env = SeparationEnvelope::new(2.0, 0.1, 1.0, 0.5).unwrap();
        assert_relative_eq!(env.scale(), 0.4);
        assert_relative_eq!(env.novikov_bound(), 0.04);
        assert_relative_eq!(env.at(0.0), 0.4);
        assert_relative_eq!(env.at(1.0), 0.4 * (-1.0f64).exp());
        assert!(env.novikov_tail(5.0) < 2e-6);
        assert!(
            SeparationEnvelope::new(2.0, 0.1, 0.5, 0.5).is_err(),
            "separation rate must sit strictly below the kernel rate"
        );
    }

    #[test]
    fn envelope_dominates_the_standard_pasts() {
        let (x, y) = separated_pasts(0.05);
        let env = SeparationEnvelope::new(1.0, 0.1, 1.0, 0.5).unwrap();
        assert!(env.dominates(&x, &y).unwrap());
        // amplitude below the separation must be rejected
        let tight = SeparationEnvelope::new(1.0, 0.05, 1.0, 0.5).unwrap();
        assert!(!tight.dominates(&x, &y).unwrap());
        // a slower separation rate cannot absorb the e^{0.5|s|} growth
        let slow = SeparationEnvelope::new(1.0, 0.1, 1.0, 0.25).unwrap();
        assert!(!slow.dominates(&x, &y).unwrap());
    }

    #[test]
    fn identical_pasts_have_zero_discrepancy_and_unit_density() {
        let spec = md_spec();
        let past = PastHistory::constant(&[0.3], 0.01, 20).unwrap();
        let (profile, traj) =
            drift_discrepancy(&spec, &past, &past, 1.0, 0.01, 7, 0).unwrap();
        assert!(profile.norms().iter().all(|n| *n == 0.0));
        assert_eq!(density_sample(&profile, &traj).unwrap(), 1.0);
    }

    #[test]
    fn ou_ignores_the_past_entirely() {
        // OU reads only x(0), so different pasts with equal endpoints give a
        // zero profile
        let spec = DriftSpec::ou(1.0, 1).unwrap();
        let (x, y) = separated_pasts(0.01);
        let (profile, _) = drift_discrepancy(&spec, &x, &y, 1.0, 0.01, 3, 0).unwrap();
        assert!(profile.norms().iter().all(|n| *n == 0.0));
    }

    #[test]
    fn endpoint_mismatch_is_rejected() {
        let spec = md_spec();
        let x = PastHistory::constant(&[0.0], 0.01, 10).unwrap();
        let y = PastHistory::constant(&[0.1], 0.01, 10).unwrap();
        assert!(matches!(
            drift_discrepancy(&spec, &x, &y, 1.0, 0.01, 0, 0),
            Err(Error::SpliceEndpointMismatch { .. })
        ));
    }

    #[test]
    fn discrepancy_decays_inside_the_envelope() {
        let spec = md_spec();
        let (x, y) = separated_pasts(0.01);
        // K covering the realised states: b * eps * lambda * R with R = 4
        let env = SeparationEnvelope::new(2.0, 0.1, 1.0, 0.5).unwrap();
        let (profile, traj) = drift_discrepancy(&spec, &x, &y, 4.0, 0.01, 11, 0).unwrap();
        assert!(
            traj.sup_norm() < 4.0,
            "the radius audit must cover the realised path"
        );
        let ratio = profile.sup_envelope_ratio(&env);
        assert!(ratio <= 1.01, "profile exceeds the envelope: {ratio}");
        assert!(ratio > 0.0, "memory drift must produce a nonzero profile");
        assert!(profile.novikov_integral() <= env.novikov_bound() + 1e-6);
    }

    #[test]
    fn small_martingale_test() {
        let spec = md_spec();
        let (x, y) = separated_pasts(0.02);
        let env = SeparationEnvelope::new(2.0, 0.1, 1.0, 0.5).unwrap();
        let report =
            girsanov_report(&spec, &x, &y, &env, 2.0, 0.02, 2024, 400).unwrap();
        assert!(
            report.martingale_ok(),
            "mean density {} +- {} strays from 1",
            report.density_mean,
            report.density_se
        );
    }

    #[test]
    fn ou_coupling_contracts_at_the_exact_rate() {
        let spec = DriftSpec::ou(1.0, 1).unwrap();
        let x = PastHistory::constant(&[8.0], 0.01, 5).unwrap();
        let y = PastHistory::constant(&[-2.0], 0.01, 5).unwrap();
        let functional = FunctionalSpec {
            window: 0.5,
            clamp: 2.0,
            burn_in: 1.0,
        };
        let report = couple(&spec, &x, &y, 5.0, 0.01, 5, &functional, 4).unwrap();
        // gap_k = 10 (1 - b dt)^k, checked by sequential reference
        let mut reference = 10.0f64;
        for (k, gap) in report.gap_profile.iter().enumerate() {
            assert!(
                (gap - reference).abs() <= 1e-12 * reference,
                "node {k}: coupled gap {gap} vs exact recursion {reference}"
            );
            reference *= 1.0 - 0.01;
        }
    }

    #[test]
    fn coupled_averages_agree_within_calibration() {
        let spec = md_spec();
        let x = PastHistory::constant(&[1.0], 0.02, 10).unwrap();
        let y = PastHistory::constant(&[-1.0], 0.02, 10).unwrap();
        let functional = FunctionalSpec {
            window: 1.0,
            clamp: 3.0,
            burn_in: 10.0,
        };
        let report = couple(&spec, &x, &y, 80.0, 0.02, 9, &functional, 8).unwrap();
        assert!(
            report.within_calibration,
            "gap {} vs calibration sd {}",
            report.gap,
            report.calibration_sd
        );
        let last = *report.gap_profile.last().unwrap();
        assert!(
            last < 1e-6,
            "shared-noise paths must have merged by T = 80, gap {last}"
        );
    }
}
