//! Local-uniform metric on pasts.
//!
//! The space of pasts carries the metric
//!
//! ```text
//!     rho(f, g) = sum over n >= 1 of 2^-n * min(1, ||f - g||_n)
//! ```
//!
//! where `||h||_n` is the sup norm on `[-n, 0]`.  The series is truncated at
//! `n_max`, which introduces an error of at most `2^-n_max` since every
//! clamped term is bounded by one.

use crate::error::{Error, Result};
use crate::real::Real;

use super::{euclid, PastHistory};

/// Truncated local-uniform distance between two stored pasts.
///
/// Both histories must share dimension and grid step, and their windows must
/// cover `[-n_max, 0]`.  Sup norms are evaluated on the stored grid.
pub fn lu_metric<T: Real>(
    f: &PastHistory<T>,
    g: &PastHistory<T>,
    n_max: usize,
) -> Result<T> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: g.dim(),
        });
    }
    let dt = f.grid_step();
    if (dt - g.grid_step()).abs() > dt * T::of(1e-12) {
        return Err(Error::GridMismatch {
            context: "lu_metric operands must share a grid",
            expected: dt.as_f64(),
            got: g.grid_step().as_f64(),
        });
    }
    let dim = f.dim();
    let mut total = T::zero();
    let mut weight = T::one();
    let mut diff = vec![T::zero(); dim];
    let mut sup = T::zero();
    let mut covered: usize = 0; // nodes already included in the running sup
    for n in 1..=n_max {
        let steps = (T::of_usize(n) / dt).round();
        let steps = steps
            .to_usize()
            .ok_or_else(|| Error::Invalid {
                context: "lu_metric",
                reason: format!("horizon {n} not representable on the grid"),
            })?;
        if steps + 1 > f.window_len().min(g.window_len()) {
            return Err(Error::Invalid {
                context: "lu_metric",
                reason: format!(
                    "windows cover {} samples but [-{n}, 0] needs {}",
                    f.window_len().min(g.window_len()),
                    steps + 1
                ),
            });
        }
        // extend the running sup norm from [-(n-1), 0] to [-n, 0]
        while covered <= steps {
            let fk = f.window_len() - 1 - covered;
            let gk = g.window_len() - 1 - covered;
            for (j, d) in diff.iter_mut().enumerate() {
                *d = f.sample_component(fk, j) - g.sample_component(gk, j);
            }
            sup = sup.max(euclid(&diff));
            covered += 1;
        }
        weight *= T::of(0.5);
        total += weight * sup.min(T::one());
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::PastHistory;
    use approx::assert_relative_eq;

    fn flat(value: f64, nodes: usize) -> PastHistory<f64> {
        PastHistory::constant(&[value], 1.0, nodes - 1).unwrap()
    }

    #[test]
    fn identical_paths_have_zero_distance() {
        let f = flat(0.0, 25);
        assert_eq!(lu_metric(&f, &f, 20).unwrap(), 0.0);
    }

    #[test]
    fn unit_separation_saturates_every_term() {
        let f = flat(0.0, 25);
        let g = flat(1.0, 25);
        let got = lu_metric(&f, &g, 20).unwrap();
        assert_relative_eq!(got, 1.0 - 2f64.powi(-20), max_relative = 1e-15);
    }

    #[test]
    fn half_separation_scales_the_clamped_sum() {
        let f = flat(0.0, 25);
        let g = flat(0.5, 25);
        let got = lu_metric(&f, &g, 20).unwrap();
        assert_relative_eq!(got, 0.5 * (1.0 - 2f64.powi(-20)), max_relative = 1e-15);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let f = flat(0.0, 25);
        let g = PastHistory::constant(&[0.0], 0.5, 48).unwrap();
        assert!(lu_metric(&f, &g, 10).is_err());
    }

    #[test]
    fn short_windows_are_rejected() {
        let f = flat(0.0, 5);
        let g = flat(1.0, 5);
        assert!(
            lu_metric(&f, &g, 20).is_err(),
            "a 4-second window cannot evaluate a 20-second metric"
        );
    }
}
