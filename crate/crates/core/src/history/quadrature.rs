//! Reference quadrature used to cross-check the O(1) accumulators.
//!
//! Everything here recomputes kernel integrals by brute force over an
//! explicitly stored path.  The arithmetic deliberately avoids the
//! incremental decay recursion of [`super::KernelAccumulator`]: weights are
//! rebuilt from scratch at every node so the two code paths share nothing
//! but the trapezoid rule itself.

use crate::error::{Error, Result};
use crate::real::Real;

use super::{euclid, TailModel, Transform};

/// Brute-force `integral of exp(rate*s) * phi(x(s)) ds` over a sampled path
/// (`samples` flattened with stride `dim`, oldest first, newest at `s = 0`)
/// plus the closed-form contribution of the tail model before the samples.
pub fn kernel_integral_reference<T: Real>(
    dim: usize,
    grid_step: T,
    samples: &[T],
    rate: T,
    transform: Transform,
    tail: &TailModel<T>,
) -> Result<Vec<T>> {
    if samples.is_empty() || !samples.len().is_multiple_of(dim) {
        return Err(Error::EmptyWindow);
    }
    let nodes = samples.len() / dim;
    let out_dim = transform.output_dim(dim);
    let mut acc = vec![T::zero(); out_dim];
    let half = T::of(0.5);
    for k in 0..nodes {
        let s = -grid_step * T::of_usize(nodes - 1 - k);
        let edge = k == 0 || k == nodes - 1;
        let weight = grid_step * if edge { half } else { T::one() } * (rate * s).exp();
        if nodes == 1 {
            break; // a single node spans no segment
        }
        let x = &samples[k * dim..(k + 1) * dim];
        match transform {
            Transform::Identity => {
                for (a, v) in acc.iter_mut().zip(x) {
                    *a += weight * *v;
                }
            }
            Transform::Coordinate(i) => acc[0] += weight * x[i],
            Transform::Norm => acc[0] += weight * euclid(x),
        }
    }
    let span = grid_step * T::of_usize(nodes - 1);
    for term in tail.terms() {
        let gap = rate - term.rate;
        if gap <= T::zero() {
            return Err(Error::TailRateTooLarge {
                tail_rate: term.rate.as_f64(),
                kernel_rate: rate.as_f64(),
            });
        }
        let weight = (-gap * span).exp() / gap;
        match transform {
            Transform::Identity => {
                for (a, v) in acc.iter_mut().zip(&term.amplitude) {
                    *a += weight * *v;
                }
            }
            Transform::Coordinate(i) => acc[0] += weight * term.amplitude[i],
            Transform::Norm => {
                return Err(Error::NoClosedForm {
                    reason: "reference norm integral over a parametric tail".to_string(),
                })
            }
        }
    }
    Ok(acc)
}

/// Composite trapezoid rule with `n` segments.
pub fn trapezoid<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, n: usize) -> T {
    let h = (b - a) / T::of_usize(n);
    let mut sum = (f(a) + f(b)) / T::of(2.0);
    for k in 1..n {
        sum += f(a + h * T::of_usize(k));
    }
    sum * h
}

/// Richardson-extrapolated trapezoid rule (two grids, `n` and `2n` segments),
/// accurate to fourth order for smooth integrands.
pub fn richardson_trapezoid<T: Real, F: Fn(T) -> T + Copy>(f: F, a: T, b: T, n: usize) -> T {
    let coarse = trapezoid(f, a, b, n);
    let fine = trapezoid(f, a, b, 2 * n);
    (T::of(4.0) * fine - coarse) / T::of(3.0)
}
