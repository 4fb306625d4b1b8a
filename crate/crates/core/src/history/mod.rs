//! Past histories with exponentially weighted memory.
//!
//! A drift with infinite memory reads the whole past of the solution through
//! integrals of the form
//!
//! ```text
//!     I(t) = integral over s <= 0 of exp(lambda*s) * phi(x(t+s)) ds
//! ```
//!
//! Storing the full past is impossible, but every such integral satisfies an
//! exact one-step recursion: advancing time by `dt` multiplies the old value
//! by `exp(-lambda*dt)` and adds the contribution of the newly traversed
//! segment.  [`PastHistory`] therefore keeps
//!
//! * a finite sliding window of recent samples (for metrics and records),
//! * one [`KernelAccumulator`] per registered `(lambda, phi)` pair, updated
//!   in O(1) per step with trapezoidal quadrature on the new segment,
//! * a parametric [`TailModel`] describing the path before the stored window
//!   as a sum of exponentials `amp * exp(rate*|s|)`.
//!
//! Histories constructed from analytic pasts (zero, constant, exponential
//! sums) initialise their accumulators with closed-form integrals over the
//! entire half line, so no truncation error enters at construction time.
//! Accumulators must be registered before any sample is pushed; afterwards
//! the recursion keeps them consistent with the (conceptually infinite) past
//! without further reference to the tail model.

mod metric;
mod record;
pub mod quadrature;

pub use metric::lu_metric;
pub use record::{splice, PathRecord, SpliceMode};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Pointwise map applied to the state before kernel integration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// `phi(x) = x`, one output per coordinate.
    Identity,
    /// `phi(x) = x_i`, scalar output.
    Coordinate(usize),
    /// `phi(x) = |x|` (euclidean), scalar output.
    Norm,
}

impl Transform {
    /// Number of scalars the transform produces in dimension `dim`.
    #[must_use]
    pub fn output_dim(&self, dim: usize) -> usize {
        match self {
            Transform::Identity => dim,
            Transform::Coordinate(_) | Transform::Norm => 1,
        }
    }

    /// Applies the transform to a state vector.
    #[must_use]
    pub fn apply<T: Real>(&self, x: &[T]) -> Vec<T> {
        match self {
            Transform::Identity => x.to_vec(),
            Transform::Coordinate(i) => vec![x[*i]],
            Transform::Norm => vec![euclid(x)],
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Transform::Coordinate(i) if *i >= dim => Err(Error::NonScalarTransform {
                transform: format!("{self:?}"),
                dim,
            }),
            _ => Ok(()),
        }
    }

    fn describe(&self) -> String {
        format!("{self:?}")
    }
}

pub(crate) fn euclid<T: Real>(x: &[T]) -> T {
    x.iter().map(|v| *v * *v).sum::<T>().sqrt()
}

/// One exponential component of an analytic past: `amplitude * exp(rate*|s|)`
/// for `s <= 0`.  Negative rates describe pasts that decay backwards in time,
/// `rate = 0` a constant offset, positive rates growth into the past.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm<T> {
    pub amplitude: Vec<T>,
    pub rate: T,
}

impl<T: Real> ExpTerm<T> {
    pub fn new(amplitude: Vec<T>, rate: T) -> Self {
        Self { amplitude, rate }
    }

    /// Value of the term at time offset `s <= 0`.
    fn value_at(&self, s: T) -> Vec<T> {
        // exp(rate*|s|) = exp(-rate*s) on the negative half line
        let factor = (-self.rate * s).exp();
        self.amplitude.iter().map(|a| *a * factor).collect()
    }
}

/// Model of the path before the stored window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailModel<T> {
    /// Path is identically zero before the window.
    Zero,
    /// Path equals a sum of exponential terms before the window.
    Exponential { terms: Vec<ExpTerm<T>> },
}

impl<T: Real> TailModel<T> {
    #[must_use]
    pub fn terms(&self) -> &[ExpTerm<T>] {
        match self {
            TailModel::Zero => &[],
            TailModel::Exponential { terms } => terms,
        }
    }

    /// Largest growth rate appearing in the tail (0 for an empty tail).
    #[must_use]
    pub fn max_rate(&self) -> T {
        self.terms()
            .iter()
            .map(|t| t.rate)
            .fold(T::zero(), |a, b| a.max(b))
    }

    fn validate(&self, dim: usize) -> Result<()> {
        for term in self.terms() {
            if term.amplitude.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: term.amplitude.len(),
                });
            }
            if !term.rate.is_finite() || term.amplitude.iter().any(|a| !a.is_finite()) {
                return Err(Error::NonFiniteSample);
            }
        }
        Ok(())
    }

    fn from_terms(terms: Vec<ExpTerm<T>>) -> Self {
        if terms.is_empty() {
            TailModel::Zero
        } else {
            TailModel::Exponential { terms }
        }
    }
}

/// Integral of `exp(rate*s) * exp(term_rate*|s|)` over `s <= -horizon`,
/// i.e. `exp(-(rate - term_rate) * horizon) / (rate - term_rate)`.
fn tail_weight<T: Real>(rate: T, term_rate: T, horizon: T) -> Result<T> {
    let gap = rate - term_rate;
    if gap <= T::zero() {
        return Err(Error::TailRateTooLarge {
            tail_rate: term_rate.as_f64(),
            kernel_rate: rate.as_f64(),
        });
    }
    Ok((-gap * horizon).exp() / gap)
}

/// Decomposes a list of terms as nonnegative multiples of a common direction,
/// which is the only case where `|sum of terms|` has an elementary closed
/// form.  Returns the scalar weights `|amp_j|` on success.
fn aligned_magnitudes<T: Real>(terms: &[ExpTerm<T>]) -> Option<Vec<T>> {
    let Some(lead_term) = terms.iter().find(|t| euclid(&t.amplitude) > T::zero()) else {
        // every amplitude vanishes: the sum is zero, |sum| = 0
        return Some(vec![T::zero(); terms.len()]);
    };
    let lead = lead_term.amplitude.clone();
    let lead_norm = euclid(&lead);
    let mut mags = Vec::with_capacity(terms.len());
    for term in terms {
        let norm = euclid(&term.amplitude);
        if norm == T::zero() {
            mags.push(T::zero());
            continue;
        }
        // cosine similarity must be +1 up to roundoff
        let dot: T = term
            .amplitude
            .iter()
            .zip(&lead)
            .map(|(a, b)| *a * *b)
            .sum();
        let cos = dot / (norm * lead_norm);
        if (cos - T::one()).abs() > T::of(1e-9) {
            return None;
        }
        mags.push(norm);
    }
    Some(mags)
}

/// Running value of one exponentially weighted integral of the past.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelAccumulator<T> {
    pub rate: T,
    pub transform: Transform,
    /// Current value of the integral, one entry per transform output.
    value: Vec<T>,
    /// Transform of the most recent sample, kept for the trapezoid update.
    last: Vec<T>,
}

impl<T: Real> KernelAccumulator<T> {
    #[must_use]
    pub fn value(&self) -> &[T] {
        &self.value
    }

    /// O(1) update for one time step: exact exponential decay of the old
    /// integral plus trapezoidal quadrature of the new segment.
    fn push(&mut self, dt: T, new: &[T]) {
        let decay = (-self.rate * dt).exp();
        let half = dt / T::of(2.0);
        match self.transform {
            Transform::Identity => {
                for ((v, l), nt) in self.value.iter_mut().zip(&mut self.last).zip(new) {
                    *v = decay * *v + half * (decay * *l + *nt);
                    *l = *nt;
                }
            }
            Transform::Coordinate(i) => {
                let nt = new[i];
                self.value[0] = decay * self.value[0] + half * (decay * self.last[0] + nt);
                self.last[0] = nt;
            }
            Transform::Norm => {
                let nt = euclid(new);
                self.value[0] = decay * self.value[0] + half * (decay * self.last[0] + nt);
                self.last[0] = nt;
            }
        }
    }
}

/// Finite representation of an infinite past: sliding sample window,
/// registered kernel accumulators and a parametric tail model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PastHistory<T> {
    dim: usize,
    grid_step: T,
    /// Window samples, flattened with stride `dim`, oldest first.  The last
    /// sample is the state at time 0 and always equals `current`.
    window: VecDeque<T>,
    current: Vec<T>,
    tail_model: TailModel<T>,
    accumulators: Vec<KernelAccumulator<T>>,
    /// Present when the window samples follow the same analytic form as the
    /// tail, which allows closed-form accumulator initialisation.
    analytic_window: Option<Vec<ExpTerm<T>>>,
    pushes: u64,
}

impl<T: Real> PastHistory<T> {
    /// History identically zero on the whole half line.
    pub fn zero(dim: usize, grid_step: T, window_steps: usize) -> Result<Self> {
        Self::analytic(dim, grid_step, window_steps, Vec::new())
    }

    /// History equal to a constant vector on the whole half line.
    pub fn constant(value: &[T], grid_step: T, window_steps: usize) -> Result<Self> {
        Self::analytic(
            value.len(),
            grid_step,
            window_steps,
            vec![ExpTerm::new(value.to_vec(), T::zero())],
        )
    }

    /// History equal to `amplitude * exp(rate*|s|)` on the whole half line.
    pub fn exponential(
        amplitude: &[T],
        rate: T,
        grid_step: T,
        window_steps: usize,
    ) -> Result<Self> {
        Self::analytic(
            amplitude.len(),
            grid_step,
            window_steps,
            vec![ExpTerm::new(amplitude.to_vec(), rate)],
        )
    }

    /// History equal to a sum of exponential terms on the whole half line.
    pub fn analytic(
        dim: usize,
        grid_step: T,
        window_steps: usize,
        terms: Vec<ExpTerm<T>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        check_step(grid_step)?;
        let tail = TailModel::from_terms(terms.clone());
        tail.validate(dim)?;
        let nodes = window_steps + 1;
        let mut window = VecDeque::with_capacity(nodes * dim);
        for k in 0..nodes {
            let s = -grid_step * T::of_usize(nodes - 1 - k);
            let mut value = vec![T::zero(); dim];
            for term in &terms {
                for (v, t) in value.iter_mut().zip(term.value_at(s)) {
                    *v += t;
                }
            }
            window.extend(value);
        }
        let current = window.iter().skip((nodes - 1) * dim).copied().collect();
        Ok(Self {
            dim,
            grid_step,
            window,
            current,
            tail_model: tail,
            accumulators: Vec::new(),
            analytic_window: Some(terms),
            pushes: 0,
        })
    }

    /// History given by raw window samples (flattened, oldest first) and a
    /// tail model for the path before the window.
    pub fn from_window(
        dim: usize,
        grid_step: T,
        samples: Vec<T>,
        tail_model: TailModel<T>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        check_step(grid_step)?;
        if samples.is_empty() || !samples.len().is_multiple_of(dim) {
            return Err(Error::EmptyWindow);
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample);
        }
        tail_model.validate(dim)?;
        let current = samples[samples.len() - dim..].to_vec();
        Ok(Self {
            dim,
            grid_step,
            window: samples.into(),
            current,
            tail_model,
            accumulators: Vec::new(),
            analytic_window: None,
            pushes: 0,
        })
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[must_use]
    pub fn grid_step(&self) -> T {
        self.grid_step
    }

    /// Number of stored samples.
    #[must_use]
    pub fn window_len(&self) -> usize {
        self.window.len() / self.dim
    }

    /// Time span covered by the stored window.
    #[must_use]
    pub fn window_seconds(&self) -> T {
        self.grid_step * T::of_usize(self.window_len() - 1)
    }

    /// State at time 0.
    #[must_use]
    pub fn current(&self) -> &[T] {
        &self.current
    }

    #[must_use]
    pub fn tail_model(&self) -> &TailModel<T> {
        &self.tail_model
    }

    #[must_use]
    pub fn accumulators(&self) -> &[KernelAccumulator<T>] {
        &self.accumulators
    }

    /// Window sample `k` (0 = oldest), copied out.
    #[must_use]
    pub fn sample(&self, k: usize) -> Vec<T> {
        (0..self.dim)
            .map(|j| self.window[k * self.dim + j])
            .collect()
    }

    /// Component `j` of window sample `k` without copying.
    #[must_use]
    pub fn sample_component(&self, k: usize, j: usize) -> T {
        self.window[k * self.dim + j]
    }

    /// Registers a kernel accumulator for `(rate, transform)`.
    ///
    /// Must happen before any sample is pushed: the initial value is computed
    /// from the construction-time window and tail, after which the push
    /// recursion keeps it exact.  Registering the same pair twice is a no-op.
    pub fn register_kernel(&mut self, rate: T, transform: Transform) -> Result<()> {
        if !rate.is_finite() || rate <= T::zero() {
            return Err(Error::InvalidRate { got: rate.as_f64() });
        }
        transform.validate(self.dim)?;
        if self.accumulator(rate, transform).is_some() {
            return Ok(());
        }
        if self.pushes > 0 {
            return Err(Error::RegisterAfterPush);
        }
        let value = match &self.analytic_window {
            Some(terms) => closed_form_integral(terms, rate, transform, T::zero(), self.dim)?,
            None => {
                let mut v = self.window_quadrature(rate, transform);
                let tail = closed_form_integral(
                    self.tail_model.terms(),
                    rate,
                    transform,
                    self.window_seconds(),
                    self.dim,
                )?;
                for (a, b) in v.iter_mut().zip(tail) {
                    *a += b;
                }
                v
            }
        };
        let last = transform.apply(&self.current);
        self.accumulators.push(KernelAccumulator {
            rate,
            transform,
            value,
            last,
        });
        Ok(())
    }

    /// Trapezoid quadrature of `exp(rate*s) * phi(x(s))` over the stored window.
    fn window_quadrature(&self, rate: T, transform: Transform) -> Vec<T> {
        let nodes = self.window_len();
        let out_dim = transform.output_dim(self.dim);
        let mut acc = vec![T::zero(); out_dim];
        if nodes < 2 {
            return acc;
        }
        let dt = self.grid_step;
        let half = T::of(0.5);
        for k in 0..nodes {
            let s = -dt * T::of_usize(nodes - 1 - k);
            let edge = k == 0 || k == nodes - 1;
            let w = dt * if edge { half } else { T::one() } * (rate * s).exp();
            match transform {
                Transform::Identity => {
                    for (j, a) in acc.iter_mut().enumerate() {
                        *a += w * self.window[k * self.dim + j];
                    }
                }
                Transform::Coordinate(i) => acc[0] += w * self.window[k * self.dim + i],
                Transform::Norm => {
                    let sample: Vec<T> = (0..self.dim)
                        .map(|j| self.window[k * self.dim + j])
                        .collect();
                    acc[0] += w * euclid(&sample);
                }
            }
        }
        acc
    }

    /// Value of the registered kernel integral for `(rate, transform)`.
    pub fn kernel_integral(&self, rate: T, transform: Transform) -> Result<Vec<T>> {
        self.accumulator(rate, transform)
            .map(|a| a.value.clone())
            .ok_or_else(|| Error::UnregisteredKernel {
                rate: rate.as_f64(),
                transform: transform.describe(),
            })
    }

    /// Scalar convenience for transforms with one output.
    pub fn kernel_integral_scalar(&self, rate: T, transform: Transform) -> Result<T> {
        let v = self.kernel_integral(rate, transform)?;
        if v.len() != 1 {
            return Err(Error::NonScalarTransform {
                transform: transform.describe(),
                dim: self.dim,
            });
        }
        Ok(v[0])
    }

    fn accumulator(&self, rate: T, transform: Transform) -> Option<&KernelAccumulator<T>> {
        self.accumulators
            .iter()
            .find(|a| a.rate == rate && a.transform == transform)
    }

    /// Advances the history by one step of size `dt == grid_step`: all
    /// accumulators are updated in O(1) and the window slides by one sample,
    /// the dropped sample's contribution living on inside the accumulators.
    pub fn push_sample(&mut self, dt: T, value: &[T]) -> Result<()> {
        let tol = self.grid_step * T::of(1e-12);
        if (dt - self.grid_step).abs() > tol {
            return Err(Error::GridMismatch {
                context: "push_sample step must equal the history grid step",
                expected: self.grid_step.as_f64(),
                got: dt.as_f64(),
            });
        }
        if value.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: value.len(),
            });
        }
        if value.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample);
        }
        for acc in &mut self.accumulators {
            acc.push(self.grid_step, value);
        }
        for _ in 0..self.dim {
            self.window.pop_front();
        }
        self.window.extend(value.iter().copied());
        self.current.copy_from_slice(value);
        self.pushes += 1;
        Ok(())
    }

    /// Number of samples pushed since construction.
    #[must_use]
    pub fn pushes(&self) -> u64 {
        self.pushes
    }

    /// Rebuilds the history on a different grid step from its analytic
    /// description, preserving the window duration.  Only available for
    /// histories still in their construction state: once samples have been
    /// pushed the window no longer follows a closed form and resampling it
    /// would silently change the past.
    pub fn regrid(&self, grid_step: T) -> Result<Self> {
        check_step(grid_step)?;
        let terms = match (&self.analytic_window, self.pushes) {
            (Some(terms), 0) => terms.clone(),
            _ => {
                return Err(Error::NoClosedForm {
                    reason: "regrid requires an unpushed analytic history".to_string(),
                })
            }
        };
        let steps = (self.window_seconds() / grid_step)
            .round()
            .as_f64()
            .max(1.0) as usize;
        let mut out = Self::analytic(self.dim, grid_step, steps, terms)?;
        for acc in &self.accumulators {
            out.register_kernel(acc.rate, acc.transform)?;
        }
        Ok(out)
    }
}

/// Closed-form `integral over s <= -horizon of exp(rate*s) * phi(sum of terms)`.
fn closed_form_integral<T: Real>(
    terms: &[ExpTerm<T>],
    rate: T,
    transform: Transform,
    horizon: T,
    dim: usize,
) -> Result<Vec<T>> {
    let out_dim = transform.output_dim(dim);
    let mut out = vec![T::zero(); out_dim];
    if terms.is_empty() {
        return Ok(out);
    }
    match transform {
        Transform::Identity => {
            for term in terms {
                let w = tail_weight(rate, term.rate, horizon)?;
                for (o, a) in out.iter_mut().zip(&term.amplitude) {
                    *o += *a * w;
                }
            }
        }
        Transform::Coordinate(i) => {
            for term in terms {
                let w = tail_weight(rate, term.rate, horizon)?;
                out[0] += term.amplitude[i] * w;
            }
        }
        Transform::Norm => {
            // |sum of terms| only collapses when all terms point the same way
            let mags = aligned_magnitudes(terms).ok_or_else(|| Error::NoClosedForm {
                reason: "norm of a mixed-direction exponential sum".to_string(),
            })?;
            for (term, mag) in terms.iter().zip(mags) {
                out[0] += mag * tail_weight(rate, term.rate, horizon)?;
            }
        }
    }
    Ok(out)
}

fn check_step<T: Real>(step: T) -> Result<()> {
    if !step.is_finite() || step <= T::zero() {
        return Err(Error::InvalidStep {
            got: step.as_f64(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_history_has_zero_kernel_integral() {
        let mut h = PastHistory::<f64>::zero(1, 0.01, 100).unwrap();
        h.register_kernel(1.0, Transform::Identity).unwrap();
        assert_eq!(
            h.kernel_integral_scalar(1.0, Transform::Identity).unwrap(),
            0.0
        );
        // pushing more zeros keeps it at zero exactly
        for _ in 0..50 {
            h.push_sample(0.01, &[0.0]).unwrap();
        }
        assert_eq!(
            h.kernel_integral_scalar(1.0, Transform::Identity).unwrap(),
            0.0,
            "zero path must keep a zero kernel integral"
        );
    }

    #[test]
    fn constant_history_integral_is_exact() {
        // integral of exp(s) * 2 over s <= 0 equals 2
        let mut h = PastHistory::constant(&[2.0f64], 0.01, 200).unwrap();
        h.register_kernel(1.0, Transform::Identity).unwrap();
        assert_eq!(
            h.kernel_integral_scalar(1.0, Transform::Identity).unwrap(),
            2.0,
            "closed-form initialisation should be exact for constant pasts"
        );
    }

    #[test]
    fn decaying_exponential_past_integral_is_exact() {
        // x(s) = exp(0.5 s) = exp(-0.5 |s|); integral of exp(1.5 s) = 1/1.5
        let mut h = PastHistory::exponential(&[1.0f64], -0.5, 0.01, 200).unwrap();
        h.register_kernel(1.0, Transform::Identity).unwrap();
        let got = h.kernel_integral_scalar(1.0, Transform::Identity).unwrap();
        assert_relative_eq!(got, 1.0 / 1.5, max_relative = 1e-15);
    }

    #[test]
    fn constant_push_converges_to_constant_over_rate() {
        // feeding a constant c forever drives the integral to c/lambda up to
        // the trapezoid factor (h/2)coth(h/2) = 1 + (lambda dt)^2/12 + ...
        let dt = 0.01;
        let lambda = 1.0;
        let mut h = PastHistory::<f64>::zero(1, dt, 10).unwrap();
        h.register_kernel(lambda, Transform::Identity).unwrap();
        for _ in 0..4000 {
            h.push_sample(dt, &[3.0]).unwrap();
        }
        let got = h.kernel_integral_scalar(lambda, Transform::Identity).unwrap();
        let quad_factor = (lambda * dt / 2.0) / (lambda * dt / 2.0).tanh();
        assert_relative_eq!(got, 3.0 / lambda * quad_factor, max_relative = 1e-9);
        assert!(
            (got - 3.0).abs() < 3.0 * (lambda * dt).powi(2) / 12.0 * 1.01,
            "steady state {got} should sit within the trapezoid error of 3.0"
        );
    }

    #[test]
    fn push_applies_exact_exponential_decay() {
        let dt = 0.05;
        let lambda = 2.0;
        let mut h = PastHistory::constant(&[1.5f64], dt, 4).unwrap();
        h.register_kernel(lambda, Transform::Identity).unwrap();
        let before = h.kernel_integral_scalar(lambda, Transform::Identity).unwrap();
        h.push_sample(dt, &[0.0]).unwrap();
        let after = h.kernel_integral_scalar(lambda, Transform::Identity).unwrap();
        // mirror the accumulator arithmetic exactly
        let decay = (-lambda * dt_f(dt)).exp();
        let expected = decay * before + dt / 2.0 * (decay * 1.5 + 0.0);
        assert_eq!(after, expected, "one-step update must match the recursion");
    }

    fn dt_f(x: f64) -> f64 {
        x
    }

    #[test]
    fn window_slides_and_tracks_current() {
        let mut h = PastHistory::<f64>::zero(2, 0.1, 3).unwrap();
        assert_eq!(h.window_len(), 4);
        h.push_sample(0.1, &[1.0, -1.0]).unwrap();
        h.push_sample(0.1, &[2.0, -2.0]).unwrap();
        assert_eq!(h.window_len(), 4, "window length stays fixed");
        assert_eq!(h.current(), &[2.0, -2.0]);
        assert_eq!(h.sample(3), vec![2.0, -2.0], "last sample equals current");
        assert_eq!(h.sample(2), vec![1.0, -1.0]);
        assert_eq!(h.sample(1), vec![0.0, 0.0]);
    }

    #[test]
    fn register_after_push_is_rejected() {
        let mut h = PastHistory::<f64>::zero(1, 0.1, 2).unwrap();
        h.push_sample(0.1, &[1.0]).unwrap();
        let err = h.register_kernel(1.0, Transform::Identity).unwrap_err();
        assert!(matches!(err, Error::RegisterAfterPush));
    }

    #[test]
    fn tail_rate_at_or_above_kernel_rate_is_rejected() {
        let mut h = PastHistory::exponential(&[1.0f64], 1.0, 0.01, 10).unwrap();
        let err = h.register_kernel(1.0, Transform::Identity).unwrap_err();
        assert!(
            matches!(err, Error::TailRateTooLarge { .. }),
            "tail growing at the kernel rate has no finite integral"
        );
    }

    #[test]
    fn mismatched_push_inputs_are_rejected() {
        let mut h = PastHistory::<f64>::zero(2, 0.1, 2).unwrap();
        assert!(matches!(
            h.push_sample(0.2, &[0.0, 0.0]),
            Err(Error::GridMismatch { .. })
        ));
        assert!(matches!(
            h.push_sample(0.1, &[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            h.push_sample(0.1, &[f64::NAN, 0.0]),
            Err(Error::NonFiniteSample)
        ));
    }

    #[test]
    fn unregistered_kernel_lookup_fails() {
        let h = PastHistory::<f64>::zero(1, 0.1, 2).unwrap();
        assert!(matches!(
            h.kernel_integral(1.0, Transform::Identity),
            Err(Error::UnregisteredKernel { .. })
        ));
    }

    #[test]
    fn norm_kernel_on_mixed_direction_tail_has_no_closed_form() {
        let terms = vec![
            ExpTerm::new(vec![0.1f64], 0.5),
            ExpTerm::new(vec![-0.1f64], 0.0),
        ];
        let mut h = PastHistory::analytic(1, 0.01, 10, terms).unwrap();
        assert!(matches!(
            h.register_kernel(1.0, Transform::Norm),
            Err(Error::NoClosedForm { .. })
        ));
        // the signed identity integral is still available
        h.register_kernel(1.0, Transform::Identity).unwrap();
        let got = h.kernel_integral_scalar(1.0, Transform::Identity).unwrap();
        assert_relative_eq!(got, 0.1 / 0.5 - 0.1, max_relative = 1e-14);
    }

    #[test]
    fn coordinate_transform_projects_vector_histories() {
        let mut h = PastHistory::constant(&[2.0f64, -4.0], 0.01, 10).unwrap();
        h.register_kernel(1.0, Transform::Coordinate(1)).unwrap();
        assert_eq!(
            h.kernel_integral_scalar(1.0, Transform::Coordinate(1)).unwrap(),
            -4.0
        );
    }

    #[test]
    fn serde_round_trip_preserves_state() {
        let mut h = PastHistory::constant(&[1.0f64, 2.0], 0.05, 8).unwrap();
        h.register_kernel(1.0, Transform::Identity).unwrap();
        h.push_sample(0.05, &[0.5, 0.5]).unwrap();
        let text = serde_json::to_string(&h).unwrap();
        let back: PastHistory<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, h, "JSON round trip must reproduce the history");
        for key in ["grid_step", "window", "tail_model", "accumulators"] {
            assert!(text.contains(key), "serialized history lacks key {key}");
        }
    }
}
