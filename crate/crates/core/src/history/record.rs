//! Full path records: past + future on one grid, with time shifts.
//!
//! A [`PathRecord`] stores a solution segment `X` and its driving noise `W`
//! on a shared uniform grid.  The two components may cover different ranges:
//! a spliced record knows `X` on `[-T_w, T]` but `W` only on `[0, T]`.
//!
//! Time shifts implement the stationarity transformation: shifting by `s`
//! maps `X(t)` to `X(t - s)` and re-anchors the noise so that `W(0) = 0`.
//! The anchor is stored as an index rather than baked into the samples, so
//! shifting back restores the original record bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::real::Real;

use super::PastHistory;

/// How to treat the seam when splicing a past onto a future trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpliceMode {
    /// Change-of-measure splice: past and future must share the state at 0.
    Girsanov,
    /// Coupling splice: the records may jump at 0, the future wins there.
    Coupling,
}

/// Solution and noise samples on a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRecord<T> {
    dim: usize,
    grid_step: T,
    /// Time index (in grid steps) of the first stored state sample.
    x_start: i64,
    x: Vec<T>,
    /// Time index of the first stored noise sample.
    w_start: i64,
    w: Vec<T>,
    /// Time index where the reported noise path is zero.
    w_anchor: i64,
}

impl<T: Real> PathRecord<T> {
    /// Record of a simulated trajectory on `[0, T]`.
    #[must_use]
    pub fn from_trajectory(traj: &Trajectory<T>) -> Self {
        Self {
            dim: traj.dim(),
            grid_step: traj.dt(),
            x_start: 0,
            x: traj.states().to_vec(),
            w_start: 0,
            w: traj.noise().to_vec(),
            w_anchor: 0,
        }
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[must_use]
    pub fn grid_step(&self) -> T {
        self.grid_step
    }

    /// Inclusive index range `[lo, hi]` on which the state is stored.
    #[must_use]
    pub fn x_range(&self) -> (i64, i64) {
        (
            self.x_start,
            self.x_start + (self.x.len() / self.dim) as i64 - 1,
        )
    }

    /// Inclusive index range on which the noise is stored.
    #[must_use]
    pub fn w_range(&self) -> (i64, i64) {
        (
            self.w_start,
            self.w_start + (self.w.len() / self.dim) as i64 - 1,
        )
    }

    /// Time of grid index `idx`.
    #[must_use]
    pub fn time_of(&self, idx: i64) -> T {
        self.grid_step * T::from_i64(idx).expect("grid index converts to Real")
    }

    /// State at grid index `idx`, if stored.
    #[must_use]
    pub fn x_at(&self, idx: i64) -> Option<&[T]> {
        let (lo, hi) = self.x_range();
        if idx < lo || idx > hi {
            return None;
        }
        let k = (idx - lo) as usize * self.dim;
        Some(&self.x[k..k + self.dim])
    }

    /// Noise at grid index `idx` relative to the anchor, if stored.
    #[must_use]
    pub fn w_at(&self, idx: i64) -> Option<Vec<T>> {
        let (lo, hi) = self.w_range();
        if idx < lo || idx > hi || self.w_anchor < lo || self.w_anchor > hi {
            return None;
        }
        let k = (idx - lo) as usize * self.dim;
        let a = (self.w_anchor - lo) as usize * self.dim;
        Some(
            (0..self.dim)
                .map(|j| self.w[k + j] - self.w[a + j])
                .collect(),
        )
    }

    /// Translates the record by `offset` seconds (a grid multiple) and
    /// re-anchors the noise at the new time 0.
    pub fn shift(&self, offset: T) -> Result<Self> {
        let steps_real = offset / self.grid_step;
        let rounded = steps_real.round();
        if (steps_real - rounded).abs() > T::of(1e-9) {
            return Err(Error::ShiftNotOnGrid {
                offset: offset.as_f64(),
                dt: self.grid_step.as_f64(),
            });
        }
        let m = rounded.to_i64().ok_or(Error::ShiftNotOnGrid {
            offset: offset.as_f64(),
            dt: self.grid_step.as_f64(),
        })?;
        let mut shifted = self.clone();
        shifted.x_start += m;
        shifted.w_start += m;
        let (lo, hi) = shifted.w_range();
        if lo > 0 || hi < 0 {
            return Err(Error::ShiftLeavesAnchor);
        }
        shifted.w_anchor = 0;
        Ok(shifted)
    }
}

/// Concatenates a stored past and a simulated future into one record.
///
/// The result equals the past on `s < 0` and the trajectory on `s >= 0`.
/// In [`SpliceMode::Girsanov`] the two must agree exactly at time 0.
pub fn splice<T: Real>(
    past: &PastHistory<T>,
    future: &Trajectory<T>,
    mode: SpliceMode,
) -> Result<PathRecord<T>> {
    if past.dim() != future.dim() {
        return Err(Error::DimensionMismatch {
            expected: past.dim(),
            got: future.dim(),
        });
    }
    let dt = past.grid_step();
    if (dt - future.dt()).abs() > dt * T::of(1e-12) {
        return Err(Error::GridMismatch {
            context: "splice operands must share a grid",
            expected: dt.as_f64(),
            got: future.dt().as_f64(),
        });
    }
    let start = future.x_at(0);
    if mode == SpliceMode::Girsanov && past.current() != start {
        return Err(Error::SpliceEndpointMismatch {
            past: past.current().iter().map(|v| v.as_f64()).collect(),
            future: start.iter().map(|v| v.as_f64()).collect(),
        });
    }
    let dim = past.dim();
    let past_nodes = past.window_len();
    let mut x = Vec::with_capacity((past_nodes - 1 + future.nodes()) * dim);
    for k in 0..past_nodes - 1 {
        x.extend(past.sample(k));
    }
    x.extend_from_slice(future.states());
    Ok(PathRecord {
        dim,
        grid_step: dt,
        x_start: -((past_nodes - 1) as i64),
        x,
        w_start: 0,
        w: future.noise().to_vec(),
        w_anchor: 0,
    })
}
