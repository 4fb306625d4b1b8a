//! Stationary measures by time averaging.
//!
//! The Krylov-Bogolyubov construction runs many independent trajectories and
//! records each at an independent time drawn uniformly from the grid nodes
//! `{1, ..., N}`; the resulting cloud samples the time-averaged occupation
//! measure, which converges to a stationary law as the horizon grows.  A
//! terminal mode (record at the horizon) is also provided for warm-started
//! runs.
//!
//! Empirical measures are compared in the Wasserstein-1 distance: exactly in
//! one dimension (merged-CDF formula), by random slicing in higher
//! dimensions.

pub mod checks;

use nalgebra::{DMatrix, RealField};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drift::DriftSpec;
use crate::error::{Error, Result};
use crate::history::{PastHistory, Transform};
use crate::integrate::{drive, steps_for};
use crate::noise::{CounterRng, NoiseStream};
use crate::real::Real;

/// Where along each trajectory the sample is taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// A node drawn uniformly from `{1, ..., N}` per replica (time average).
    UniformTime,
    /// The last node of every replica.
    Terminal,
}

/// How an empirical measure was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance<T> {
    pub drift: String,
    pub horizon: T,
    pub grid_step: T,
    pub seed: u64,
    pub replicas: usize,
    pub mode: SamplingMode,
}

/// A weighted-equally sample cloud in `R^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure<T> {
    dim: usize,
    samples: Vec<T>,
    pub provenance: Option<Provenance<T>>,
}

impl<T: Real> EmpiricalMeasure<T> {
    pub fn new(dim: usize, samples: Vec<T>) -> Result<Self> {
        if dim == 0 || !samples.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim.max(1),
                got: samples.len(),
            });
        }
        if samples.is_empty() {
            return Err(Error::EmptySamples {
                context: "empirical measure needs at least one sample",
            });
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample);
        }
        Ok(Self {
            dim,
            samples,
            provenance: None,
        })
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.samples.len() / self.dim
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    #[must_use]
    pub fn sample(&self, i: usize) -> &[T] {
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    #[must_use]
    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    /// Values of coordinate `j` across all samples.
    #[must_use]
    pub fn component(&self, j: usize) -> Vec<T> {
        (0..self.len()).map(|i| self.sample(i)[j]).collect()
    }

    #[must_use]
    pub fn mean(&self) -> Vec<T> {
        let n = T::of_usize(self.len());
        let mut out = vec![T::zero(); self.dim];
        for i in 0..self.len() {
            for (j, v) in self.sample(i).iter().enumerate() {
                out[j] += *v;
            }
        }
        for v in &mut out {
            *v /= n;
        }
        out
    }

    /// Mean of `|X|^2`.
    #[must_use]
    pub fn second_moment(&self) -> T {
        let n = T::of_usize(self.len());
        (0..self.len())
            .map(|i| self.sample(i).iter().map(|v| *v * *v).sum::<T>())
            .sum::<T>()
            / n
    }

    /// Standard error of the `|X|^2` mean.
    #[must_use]
    pub fn second_moment_se(&self) -> T {
        let n = self.len();
        if n < 2 {
            return T::of(f64::INFINITY);
        }
        let mean = self.second_moment();
        let var = (0..n)
            .map(|i| {
                let sq = self.sample(i).iter().map(|v| *v * *v).sum::<T>();
                (sq - mean) * (sq - mean)
            })
            .sum::<T>()
            / T::of_usize(n - 1);
        (var / T::of_usize(n)).sqrt()
    }

    /// Sample covariance (unnormalised by the mean removal bias), row-major.
    #[must_use]
    pub fn covariance(&self) -> Vec<T> {
        let n = self.len();
        let mean = self.mean();
        let mut cov = vec![T::zero(); self.dim * self.dim];
        for i in 0..n {
            let x = self.sample(i);
            for r in 0..self.dim {
                for c in 0..self.dim {
                    cov[r * self.dim + c] += (x[r] - mean[r]) * (x[c] - mean[c]);
                }
            }
        }
        let denom = T::of_usize(n.saturating_sub(1).max(1));
        for v in &mut cov {
            *v /= denom;
        }
        cov
    }
}

/// Draws the sampling node for one replica: uniform on `{1, ..., steps}`.
fn sampling_node<T: Real>(noise: &NoiseStream<T>, steps: usize, mode: SamplingMode) -> usize {
    match mode {
        SamplingMode::Terminal => steps,
        SamplingMode::UniformTime => {
            let u: T = noise.auxiliary_uniform(0);
            let k = (u * T::of_usize(steps)).ceil();
            k.to_usize().unwrap_or(steps).clamp(1, steps)
        }
    }
}

/// Krylov-Bogolyubov sample cloud: `replicas` trajectories on streams
/// `0..replicas`, one state captured per replica.  Paths are never stored.
pub fn kb_average<T: Real>(
    spec: &DriftSpec<T>,
    initial: &PastHistory<T>,
    horizon: T,
    dt: T,
    seed: u64,
    replicas: usize,
    mode: SamplingMode,
) -> Result<EmpiricalMeasure<T>> {
    if replicas == 0 {
        return Err(Error::EmptySamples {
            context: "kb_average needs at least one replica",
        });
    }
    let steps = steps_for(horizon, dt)?;
    let dim = spec.dim();
    let rows: Vec<Vec<T>> = (0..replicas)
        .into_par_iter()
        .map(|r| -> Result<Vec<T>> {
            let noise = NoiseStream::<T>::new(seed, r as u64, dim);
            let target = sampling_node(&noise, steps, mode);
            let mut captured = vec![T::zero(); dim];
            drive(
                spec,
                initial,
                target,
                dt,
                |k| noise.increment(k, dt),
                None,
                |k, history, _| {
                    if k == target {
                        captured.copy_from_slice(history.current());
                    }
                },
            )?;
            Ok(captured)
        })
        .collect::<Result<_>>()?;
    let mut samples = Vec::with_capacity(replicas * dim);
    for row in rows {
        samples.extend(row);
    }
    let mut measure = EmpiricalMeasure::new(dim, samples)?;
    measure.provenance = Some(Provenance {
        drift: spec.label(),
        horizon,
        grid_step: dt,
        seed,
        replicas,
        mode,
    });
    Ok(measure)
}

/// Like [`kb_average`] but captures the lifted state
/// `(X, rate * integral e^{rate s} X(t + s) ds)`, doubling the dimension.
#[allow(clippy::too_many_arguments)]
pub fn kb_average_with_memory<T: Real>(
    spec: &DriftSpec<T>,
    initial: &PastHistory<T>,
    horizon: T,
    dt: T,
    seed: u64,
    replicas: usize,
    mode: SamplingMode,
    rate: T,
) -> Result<EmpiricalMeasure<T>> {
    if replicas == 0 {
        return Err(Error::EmptySamples {
            context: "kb_average_with_memory needs at least one replica",
        });
    }
    let steps = steps_for(horizon, dt)?;
    let dim = spec.dim();
    let mut prepared = initial.clone();
    prepared.register_kernel(rate, Transform::Identity)?;
    let rows: Vec<Vec<T>> = (0..replicas)
        .into_par_iter()
        .map(|r| -> Result<Vec<T>> {
            let noise = NoiseStream::<T>::new(seed, r as u64, dim);
            let target = sampling_node(&noise, steps, mode);
            let mut captured = vec![T::zero(); 2 * dim];
            let mut capture_err: Option<Error> = None;
            drive(
                spec,
                &prepared,
                target,
                dt,
                |k| noise.increment(k, dt),
                None,
                |k, history, _| {
                    if k == target && capture_err.is_none() {
                        match history.kernel_integral(rate, Transform::Identity) {
                            Ok(acc) => {
                                captured[..dim].copy_from_slice(history.current());
                                for j in 0..dim {
                                    captured[dim + j] = rate * acc[j];
                                }
                            }
                            Err(e) => capture_err = Some(e),
                        }
                    }
                },
            )?;
            match capture_err {
                Some(e) => Err(e),
                None => Ok(captured),
            }
        })
        .collect::<Result<_>>()?;
    let mut samples = Vec::with_capacity(replicas * 2 * dim);
    for row in rows {
        samples.extend(row);
    }
    let mut measure = EmpiricalMeasure::new(2 * dim, samples)?;
    measure.provenance = Some(Provenance {
        drift: spec.label(),
        horizon,
        grid_step: dt,
        seed,
        replicas,
        mode,
    });
    Ok(measure)
}

/// Exact Wasserstein-1 distance between two one-dimensional sample sets:
/// the area between the empirical CDFs, by a merged sweep.
fn w1_one_dimensional<T: Real>(mut a: Vec<T>, mut b: Vec<T>) -> T {
    a.sort_by(|x, y| x.partial_cmp(y).expect("samples are finite"));
    b.sort_by(|x, y| x.partial_cmp(y).expect("samples are finite"));
    let (na, nb) = (T::of_usize(a.len()), T::of_usize(b.len()));
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut total = T::zero();
    let mut cursor: Option<T> = None;
    while ia < a.len() || ib < b.len() {
        let next = match (a.get(ia), b.get(ib)) {
            (Some(x), Some(y)) => {
                if x <= y {
                    *x
                } else {
                    *y
                }
            }
            (Some(x), None) => *x,
            (None, Some(y)) => *y,
            (None, None) => unreachable!("loop condition guarantees a sample"),
        };
        if let Some(prev) = cursor {
            let fa = T::of_usize(ia) / na;
            let fb = T::of_usize(ib) / nb;
            total += (fa - fb).abs() * (next - prev);
        }
        cursor = Some(next);
        while a.get(ia).is_some_and(|x| *x <= next) {
            ia += 1;
        }
        while b.get(ib).is_some_and(|y| *y <= next) {
            ib += 1;
        }
    }
    total
}

/// Wasserstein-1 distance between empirical measures of equal dimension.
///
/// Exact in one dimension; for `dim > 1` the sliced distance over
/// `projections` seeded random unit directions is returned.
pub fn w1_distance<T: Real>(
    a: &EmpiricalMeasure<T>,
    b: &EmpiricalMeasure<T>,
    projections: usize,
    seed: u64,
) -> Result<T> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let dim = a.dim();
    if dim == 1 {
        return Ok(w1_one_dimensional(a.component(0), b.component(0)));
    }
    if projections == 0 {
        return Err(Error::EmptySamples {
            context: "sliced W1 needs at least one projection",
        });
    }
    let mut rng = CounterRng::new(seed, 0x51CE);
    let mut total = T::zero();
    for _ in 0..projections {
        let mut direction = vec![T::zero(); dim];
        let mut norm_sq = T::zero();
        while norm_sq <= T::of(1e-12) {
            for v in &mut direction {
                *v = rng.gaussian();
            }
            norm_sq = direction.iter().map(|v| *v * *v).sum();
        }
        let norm = norm_sq.sqrt();
        let project = |m: &EmpiricalMeasure<T>| -> Vec<T> {
            (0..m.len())
                .map(|i| {
                    m.sample(i)
                        .iter()
                        .zip(&direction)
                        .map(|(x, d)| *x * *d)
                        .sum::<T>()
                        / norm
                })
                .collect()
        };
        total += w1_one_dimensional(project(a), project(b));
    }
    Ok(total / T::of_usize(projections))
}

/// Gaussian reference cloud with the given mean and covariance, for
/// comparing empirical measures against closed-form stationary laws.
pub fn gaussian_cloud<T: Real + RealField>(
    mean: &[T],
    covariance: &DMatrix<T>,
    count: usize,
    seed: u64,
) -> Result<EmpiricalMeasure<T>> {
    let dim = mean.len();
    if covariance.nrows() != dim || covariance.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: covariance.nrows(),
        });
    }
    let chol = covariance.clone().cholesky().ok_or(Error::Invalid {
        context: "gaussian cloud",
        reason: "covariance is not positive definite".into(),
    })?;
    let l = chol.l();
    let mut rng = CounterRng::new(seed, 0x6A05);
    let mut samples = Vec::with_capacity(count * dim);
    for _ in 0..count {
        let g: Vec<T> = (0..dim).map(|_| rng.gaussian()).collect();
        for r in 0..dim {
            let mut v = mean[r];
            for (c, gc) in g.iter().enumerate().take(r + 1) {
                v += l[(r, c)] * *gc;
            }
            samples.push(v);
        }
    }
    EmpiricalMeasure::new(dim, samples)
}
