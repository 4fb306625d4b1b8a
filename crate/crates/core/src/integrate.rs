//! Euler-Maruyama integration driven by a past history.
//!
//! One step of the scheme reads the drift from the current past, adds the
//! Wiener increment, and pushes the new state into the history:
//!
//! ```text
//!     x_{k+1} = x_k + a(past_k) * dt + dW_k
//! ```
//!
//! The noise is additive, so the scheme is strongly first order.  A stopping
//! radius only *records* the first exit time; integration always continues
//! to the horizon.  States beyond [`BLOW_UP_THRESHOLD`] (or non-finite drift
//! values) abort the run with an error naming the offending node.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drift::DriftSpec;
use crate::error::{Error, Result};
use crate::history::{PastHistory, PathRecord};
use crate::noise::NoiseStream;
use crate::real::Real;

/// States whose euclidean norm exceeds this are treated as blow-up.
pub const BLOW_UP_THRESHOLD: f64 = 1e12;

/// First crossing of the stopping radius, recorded while integrating on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingHit<T> {
    pub node: usize,
    pub radius: T,
}

/// A simulated path: states and accumulated noise on the grid `k * dt`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    dim: usize,
    dt: T,
    pub seed: u64,
    pub stream: u64,
    /// States, flattened with stride `dim`; node 0 is the initial state.
    x: Vec<T>,
    /// Accumulated Wiener path anchored at `W(0) = 0`, same layout.
    w: Vec<T>,
    pub tau_r: Option<StoppingHit<T>>,
    pub drift: DriftSpec<T>,
}

impl<T: Real> Trajectory<T> {
    #[must_use]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[must_use]
    pub fn dt(&self) -> T {
        self.dt
    }

    /// Number of stored nodes (steps + 1).
    #[must_use]
    pub fn nodes(&self) -> usize {
        self.x.len() / self.dim
    }

    #[must_use]
    pub fn steps(&self) -> usize {
        self.nodes() - 1
    }

    #[must_use]
    pub fn horizon(&self) -> T {
        self.dt * T::of_usize(self.steps())
    }

    /// State at node `k`.
    #[must_use]
    pub fn x_at(&self, k: usize) -> &[T] {
        &self.x[k * self.dim..(k + 1) * self.dim]
    }

    /// Accumulated noise at node `k`.
    #[must_use]
    pub fn w_at(&self, k: usize) -> &[T] {
        &self.w[k * self.dim..(k + 1) * self.dim]
    }

    /// Wiener increment over step `k` (between nodes `k` and `k + 1`).
    #[must_use]
    pub fn increment(&self, k: usize) -> Vec<T> {
        (0..self.dim)
            .map(|j| self.w[(k + 1) * self.dim + j] - self.w[k * self.dim + j])
            .collect()
    }

    #[must_use]
    pub fn states(&self) -> &[T] {
        &self.x
    }

    #[must_use]
    pub fn noise(&self) -> &[T] {
        &self.w
    }

    /// Euclidean norm of the state at node `k`.
    #[must_use]
    pub fn norm_at(&self, k: usize) -> T {
        self.x_at(k).iter().map(|v| *v * *v).sum::<T>().sqrt()
    }

    /// Largest state norm along the path.
    #[must_use]
    pub fn sup_norm(&self) -> T {
        (0..self.nodes()).fold(T::zero(), |m, k| m.max(self.norm_at(k)))
    }

    #[must_use]
    pub fn to_record(&self) -> PathRecord<T> {
        PathRecord::from_trajectory(self)
    }
}

/// One Euler-Maruyama step: returns the advanced past.
pub fn step<T: Real>(
    mut state: PastHistory<T>,
    spec: &DriftSpec<T>,
    dw: &[T],
    dt: T,
) -> Result<PastHistory<T>> {
    if dw.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: dw.len(),
        });
    }
    let mut drift = vec![T::zero(); spec.dim()];
    spec.evaluate_into(&state, &mut drift)?;
    if drift.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteDrift { node: 0 });
    }
    let next: Vec<T> = (0..spec.dim())
        .map(|j| state.current()[j] + drift[j] * dt + dw[j])
        .collect();
    state.push_sample(dt, &next)?;
    Ok(state)
}

/// Number of steps needed to cover `horizon` on the `dt` grid.
pub fn steps_for<T: Real>(horizon: T, dt: T) -> Result<usize> {
    if !dt.is_finite() || dt <= T::zero() {
        return Err(Error::InvalidStep { got: dt.as_f64() });
    }
    let ratio = horizon / dt;
    let rounded = ratio.round();
    if rounded < T::one() || (ratio - rounded).abs() > T::of(1e-6) {
        return Err(Error::HorizonNotOnGrid {
            horizon: horizon.as_f64(),
            dt: dt.as_f64(),
        });
    }
    rounded.to_usize().ok_or(Error::HorizonNotOnGrid {
        horizon: horizon.as_f64(),
        dt: dt.as_f64(),
    })
}

/// Core integration loop shared by all simulation front ends.  `observe` is
/// called at every node (including 0) with the node index and the current
/// past, before the step away from that node is taken.
pub(crate) fn drive<T: Real>(
    spec: &DriftSpec<T>,
    initial: &PastHistory<T>,
    steps: usize,
    dt: T,
    increment: impl Fn(u64) -> Vec<T>,
    radius: Option<T>,
    mut observe: impl FnMut(usize, &PastHistory<T>, &[T]),
) -> Result<Option<StoppingHit<T>>> {
    if initial.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: initial.dim(),
        });
    }
    let grid_tol = initial.grid_step() * T::of(1e-12);
    if (initial.grid_step() - dt).abs() > grid_tol {
        return Err(Error::GridMismatch {
            context: "initial history grid must match the integration step",
            expected: initial.grid_step().as_f64(),
            got: dt.as_f64(),
        });
    }
    let mut history = initial.clone();
    spec.register_kernels(&mut history)?;
    let dim = spec.dim();
    let threshold = T::of(BLOW_UP_THRESHOLD);
    let mut tau: Option<StoppingHit<T>> = None;
    let mut drift = vec![T::zero(); dim];
    let mut w_running = vec![T::zero(); dim];
    let norm_of = |x: &[T]| x.iter().map(|v| *v * *v).sum::<T>().sqrt();
    for k in 0..=steps {
        let x = history.current();
        if let (None, Some(r)) = (&tau, radius) {
            if norm_of(x) >= r {
                tau = Some(StoppingHit { node: k, radius: r });
            }
        }
        if norm_of(x) > threshold {
            return Err(Error::BlowUp {
                node: k,
                threshold: BLOW_UP_THRESHOLD,
            });
        }
        let dw = increment(k as u64);
        observe(k, &history, &dw);
        if k == steps {
            break;
        }
        spec.evaluate_into(&history, &mut drift)?;
        if drift.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteDrift { node: k });
        }
        // advance with the difference of consecutive accumulated-noise nodes
        // rather than the raw increment (they can differ by one ulp), so a
        // stored (x, w) pair satisfies the recursion bit for bit
        let next: Vec<T> = (0..dim)
            .map(|j| {
                let w_next = w_running[j] + dw[j];
                let dw_eff = w_next - w_running[j];
                w_running[j] = w_next;
                history.current()[j] + drift[j] * dt + dw_eff
            })
            .collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp {
                node: k + 1,
                threshold: BLOW_UP_THRESHOLD,
            });
        }
        history.push_sample(dt, &next)?;
    }
    Ok(tau)
}

#[allow(clippy::too_many_arguments)]
fn record_run<T: Real>(
    spec: &DriftSpec<T>,
    initial: &PastHistory<T>,
    steps: usize,
    dt: T,
    increment: impl Fn(u64) -> Vec<T>,
    seed: u64,
    stream: u64,
    radius: Option<T>,
) -> Result<Trajectory<T>> {
    let dim = spec.dim();
    let mut x = Vec::with_capacity((steps + 1) * dim);
    let mut w = Vec::with_capacity((steps + 1) * dim);
    let mut w_running = vec![T::zero(); dim];
    let tau = drive(
        spec,
        initial,
        steps,
        dt,
        increment,
        radius,
        |k, history, dw| {
            x.extend_from_slice(history.current());
            w.extend_from_slice(&w_running);
            if k < steps {
                for j in 0..dim {
                    w_running[j] += dw[j];
                }
            }
        },
    )?;
    Ok(Trajectory {
        dim,
        dt,
        seed,
        stream,
        x,
        w,
        tau_r: tau,
        drift: spec.clone(),
    })
}

/// Simulates one trajectory from `initial` over `[0, horizon]`.
///
/// Noise comes from the counter stream `(seed, stream)`; `radius` optionally
/// records the first exit time without stopping the run.
pub fn simulate<T: Real>(
    spec: &DriftSpec<T>,
    initial: &PastHistory<T>,
    horizon: T,
    dt: T,
    seed: u64,
    stream: u64,
    radius: Option<T>,
) -> Result<Trajectory<T>> {
    let steps = steps_for(horizon, dt)?;
    let noise = NoiseStream::new(seed, stream, spec.dim());
    record_run(
        spec,
        initial,
        steps,
        dt,
        |k| noise.increment(k, dt),
        seed,
        stream,
        radius,
    )
}

/// Simulates with externally supplied Wiener increments (shared-noise
/// couplings, step-halving convergence studies).
pub fn simulate_with_increments<T: Real>(
    spec: &DriftSpec<T>,
    initial: &PastHistory<T>,
    dt: T,
    increments: &[Vec<T>],
    radius: Option<T>,
) -> Result<Trajectory<T>> {
    let steps = increments.len();
    if steps == 0 {
        return Err(Error::EmptySamples {
            context: "simulate_with_increments needs at least one increment",
        });
    }
    record_run(
        spec,
        initial,
        steps,
        dt,
        |k| {
            if (k as usize) < steps {
                increments[k as usize].clone()
            } else {
                vec![T::zero(); spec.dim()]
            }
        },
        0,
        0,
        radius,
    )
}

/// Simulates `count` trajectories on streams `0..count` in parallel.
/// Results are collected in stream order, so the output is independent of
/// the thread schedule.
pub fn simulate_ensemble<T: Real>(
    spec: &DriftSpec<T>,
    initial: &PastHistory<T>,
    horizon: T,
    dt: T,
    seed: u64,
    count: usize,
    radius: Option<T>,
) -> Result<Vec<Trajectory<T>>> {
    (0..count)
        .into_par_iter()
        .map(|i| simulate(spec, initial, horizon, dt, seed, i as u64, radius))
        .collect()
}

/// Mean terminal strong error of the step `dt` against a `dt / refinement`
/// self-reference sharing the same Brownian path (coarse increments are the
/// block sums of the fine ones), averaged over `replicas` streams.
pub fn strong_error<T: Real>(
    spec: &DriftSpec<T>,
    initial: &PastHistory<T>,
    horizon: T,
    dt: T,
    refinement: usize,
    seed: u64,
    replicas: usize,
) -> Result<T> {
    if refinement < 2 || replicas == 0 {
        return Err(Error::Invalid {
            context: "strong error",
            reason: "refinement must be at least 2 and replicas at least 1".into(),
        });
    }
    let coarse_steps = steps_for(horizon, dt)?;
    let fine_dt = dt / T::of_usize(refinement);
    // the initial history lives on the coarse grid; rebuild it on the fine
    // grid from the same tail description so both runs share a past
    let fine_initial = initial.regrid(fine_dt)?;
    let errors: Vec<T> = (0..replicas)
        .into_par_iter()
        .map(|r| -> Result<T> {
            let noise = NoiseStream::<T>::new(seed, r as u64, spec.dim());
            let fine_incs =
                noise.increments(0..(coarse_steps * refinement) as u64, fine_dt);
            let coarse_incs: Vec<Vec<T>> = fine_incs
                .chunks(refinement)
                .map(|block| {
                    let mut sum = vec![T::zero(); spec.dim()];
                    for inc in block {
                        for (s, v) in sum.iter_mut().zip(inc) {
                            *s += *v;
                        }
                    }
                    sum
                })
                .collect();
            let coarse = simulate_with_increments(spec, initial, dt, &coarse_incs, None)?;
            let fine = simulate_with_increments(spec, &fine_initial, fine_dt, &fine_incs, None)?;
            let xc = coarse.x_at(coarse.nodes() - 1);
            let xf = fine.x_at(fine.nodes() - 1);
            Ok(xc
                .iter()
                .zip(xf)
                .map(|(a, b)| (*a - *b) * (*a - *b))
                .sum::<T>()
                .sqrt())
        })
        .collect::<Result<_>>()?;
    Ok(errors.iter().copied().sum::<T>() / T::of_usize(replicas))
}

/// Least-squares slope of `log(err)` against `log(dt)` over several step
/// sizes; close to 1 for a strongly first-order scheme.  Returns the
/// per-step errors and the slope.
pub fn strong_order_slope<T: Real>(
    spec: &DriftSpec<T>,
    initial: &PastHistory<T>,
    horizon: T,
    dts: &[T],
    refinement: usize,
    seed: u64,
    replicas: usize,
) -> Result<(Vec<T>, T)> {
    if dts.len() < 2 {
        return Err(Error::Invalid {
            context: "strong order",
            reason: "need at least two step sizes for a regression".into(),
        });
    }
    let mut errors = Vec::with_capacity(dts.len());
    for &dt in dts {
        let initial_on_grid = initial.regrid(dt)?;
        errors.push(strong_error(
            spec,
            &initial_on_grid,
            horizon,
            dt,
            refinement,
            seed,
            replicas,
        )?);
    }
    let n = T::of_usize(dts.len());
    let xs: Vec<T> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<T> = errors
        .iter()
        .map(|e| {
            if *e > T::zero() {
                Ok(e.ln())
            } else {
                Err(Error::DegenerateEstimate)
            }
        })
        .collect::<Result<_>>()?;
    let mean_x = xs.iter().copied().sum::<T>() / n;
    let mean_y = ys.iter().copied().sum::<T>() / n;
    let mut num = T::zero();
    let mut den = T::zero();
    for (x, y) in xs.iter().zip(&ys) {
        num += (*x - mean_x) * (*y - mean_y);
        den += (*x - mean_x) * (*x - mean_x);
    }
    if den <= T::zero() {
        return Err(Error::DegenerateEstimate);
    }
    Ok((errors, num / den))
}

/// Replays the Euler-Maruyama recursion of a stored trajectory and returns
/// the largest pointwise deviation (exactly zero for an untampered run).
pub fn verify_recursion<T: Real>(
    traj: &Trajectory<T>,
    initial: &PastHistory<T>,
) -> Result<T> {
    let mut history = initial.clone();
    traj.drift.register_kernels(&mut history)?;
    let dim = traj.dim();
    let mut worst = T::zero();
    let mut drift = vec![T::zero(); dim];
    for k in 0..traj.steps() {
        traj.drift.evaluate_into(&history, &mut drift)?;
        let dw = traj.increment(k);
        for j in 0..dim {
            let predicted = history.current()[j] + drift[j] * traj.dt() + dw[j];
            worst = worst.max((predicted - traj.x_at(k + 1)[j]).abs());
        }
        history.push_sample(traj.dt(), traj.x_at(k + 1))?;
    }
    Ok(worst)
}
