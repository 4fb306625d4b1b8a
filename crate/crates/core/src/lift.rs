//! Markovian lift of the linear distributed-delay drift.
//!
//! With `Y(t) = lambda * integral_{-inf}^{0} e^{lambda s} X(t + s) ds` the
//! scalar delay equation becomes the degenerate two-block diffusion
//!
//! ```text
//!     dX = (-b X + kappa Y) dt + dW
//!     dY = lambda (X - Y) dt
//! ```
//!
//! whose stationary covariance `Sigma` solves the Lyapunov equation
//! `A Sigma + Sigma A^T + B B^T = 0`.  This closed form is the reference
//! against which memory-augmented empirical measures are compared.

use nalgebra::{DMatrix, DVector, RealField};

use crate::error::{Error, Result};
use crate::real::Real;

/// Drift matrix of the lifted system, `2 dim x 2 dim`, block layout
/// `[[-b I, kappa I], [lambda I, -lambda I]]`.
#[must_use]
pub fn lift_matrix<T: Real + RealField>(b: T, kappa: T, lambda: T, dim: usize) -> DMatrix<T> {
    let m = 2 * dim;
    DMatrix::from_fn(m, m, |i, j| {
        let (bi, bj) = (i / dim, j / dim);
        if i % dim != j % dim {
            return T::zero();
        }
        match (bi, bj) {
            (0, 0) => -b,
            (0, 1) => kappa,
            (1, 0) => lambda,
            (1, 1) => -lambda,
            _ => unreachable!("block index out of range"),
        }
    })
}

/// Noise covariance `B B^T` of the lift: identity on the state block, zero
/// on the memory block.
#[must_use]
pub fn lift_noise_covariance<T: Real + RealField>(dim: usize) -> DMatrix<T> {
    let m = 2 * dim;
    DMatrix::from_fn(m, m, |i, j| {
        if i == j && i < dim {
            T::one()
        } else {
            T::zero()
        }
    })
}

/// Solves `A Sigma + Sigma A^T + Q = 0` by vectorisation:
/// `(I (x) A + A (x) I) vec(Sigma) = -vec(Q)`.
///
/// Fails when the Kronecker system is singular (`A` has eigenvalues summing
/// to zero, i.e. the lift is not exponentially stable) or the solution is
/// not a covariance matrix.
pub fn solve_lyapunov<T: Real + RealField>(
    a: &DMatrix<T>,
    q: &DMatrix<T>,
) -> Result<DMatrix<T>> {
    let m = a.nrows();
    if a.ncols() != m || q.nrows() != m || q.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: q.nrows(),
        });
    }
    // the equation has a covariance solution iff A is Hurwitz; a backward-
    // stable LU cannot be trusted to flag the (near-)singular marginal case,
    // so gate on the spectrum directly
    let margin = T::of(1e-9) * (T::one() + inf_norm(a));
    if a
        .clone()
        .complex_eigenvalues()
        .iter()
        .any(|z| z.re >= -margin)
    {
        return Err(Error::Invalid {
            context: "lyapunov solve",
            reason: "the lift drift matrix is not exponentially stable".into(),
        });
    }
    let id = DMatrix::<T>::identity(m, m);
    let system = id.kronecker(a) + a.kronecker(&id);
    let rhs = DVector::from_iterator(m * m, q.as_slice().iter().map(|v| -*v));
    let solution = system.lu().solve(&rhs).ok_or(Error::Invalid {
        context: "lyapunov solve",
        reason: "the lift drift matrix is not exponentially stable".into(),
    })?;
    let sigma = DMatrix::from_column_slice(m, m, solution.as_slice());
    // symmetrise away the solver's rounding and sanity-check the result
    let sigma = (sigma.clone() + sigma.transpose()) * T::of(0.5);
    for i in 0..m {
        let d = sigma[(i, i)];
        if !num_traits::Float::is_finite(d) || d < T::zero() {
            return Err(Error::Invalid {
                context: "lyapunov solve",
                reason: "solution is not positive semidefinite".into(),
            });
        }
    }
    // a nearly singular system can pass the LU solve with a huge, meaningless
    // result; the residual exposes it
    let residual = lyapunov_residual(a, q, &sigma);
    let scale = T::one() + inf_norm(a) * inf_norm(&sigma) + inf_norm(q);
    let eps: T = num_traits::Float::epsilon();
    if residual > num_traits::Float::sqrt(eps) * scale {
        return Err(Error::Invalid {
            context: "lyapunov solve",
            reason: "the lift drift matrix is not exponentially stable".into(),
        });
    }
    Ok(sigma)
}

/// Largest absolute entry of the Lyapunov residual `A S + S A^T + Q`.
#[must_use]
pub fn lyapunov_residual<T: Real + RealField>(
    a: &DMatrix<T>,
    q: &DMatrix<T>,
    sigma: &DMatrix<T>,
) -> T {
    inf_norm(&(a * sigma + sigma * a.transpose() + q))
}

fn inf_norm<T: Real + RealField>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, v| {
        num_traits::Float::max(acc, num_traits::Float::abs(*v))
    })
}

/// Stationary covariance of the lifted delay system `(X, Y)`.
pub fn ldd_stationary_covariance<T: Real + RealField>(
    b: T,
    kappa: T,
    lambda: T,
    dim: usize,
) -> Result<DMatrix<T>> {
    if dim == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    let a = lift_matrix(b, kappa, lambda, dim);
    let q = lift_noise_covariance::<T>(dim);
    solve_lyapunov(&a, &q)
}
