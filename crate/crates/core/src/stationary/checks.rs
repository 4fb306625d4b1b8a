//! Quantitative consequences of the drift conditions, checked numerically.
//!
//! Under the dissipativity envelope `(a(x), x(0)) <= c1 - c2 |x(0)|^2` the
//! second moment of any solution obeys the comparison inequality
//!
//! ```text
//!     d/dt E|X|^2 <= (2 c1 + 1) - 2 c2 E|X|^2,
//! ```
//!
//! so stationary laws satisfy `E|X|^2 <= M* = (2 c1 + 1) / (2 c2)`.  With
//! the growth constant `c3` the one-step increments of a stationary solution
//! have the tail bound
//!
//! ```text
//!     P(|X(t + d) - X(t)| >= z) <= 48 d^2 / z^4 + 4 c3^2 M* d^2 / z^2,
//! ```
//!
//! and path growth is sublinear: windowed suprema stay below
//! `K n^{1/2 + delta}` for every admissible constant pair.  Each check here
//! compares a Monte Carlo estimate against its bound plus a stated
//! statistical tolerance and returns an auditable report.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::real::Real;
use crate::stationary::EmpiricalMeasure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => write!(f, "PASS"),
            Verdict::Fail => write!(f, "FAIL"),
        }
    }
}

/// One verified inequality: `measured <= bound + tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheckReport<T> {
    pub name: String,
    pub verdict: Verdict,
    pub measured: T,
    pub bound: T,
    /// Statistical slack added to the bound (0 for deterministic checks).
    pub tolerance: T,
    /// Every constant entering the bound, by name.
    pub constants: BTreeMap<String, T>,
    pub notes: Vec<String>,
}

impl<T: Real> BoundCheckReport<T> {
    fn conclude(
        name: &str,
        measured: T,
        bound: T,
        tolerance: T,
        constants: BTreeMap<String, T>,
    ) -> Self {
        let verdict = if measured <= bound + tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            name: name.to_string(),
            verdict,
            measured,
            bound,
            tolerance,
            constants,
            notes: Vec::new(),
        }
    }

    #[must_use]
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Stationary second-moment cap `M* = (2 c1 + 1) / (2 c2)`.
pub fn moment_cap<T: Real>(c1: T, c2: T) -> Result<T> {
    if !c1.is_finite() || c1 < T::zero() {
        return Err(Error::Invalid {
            context: "moment cap",
            reason: "c1 must be finite and nonnegative".into(),
        });
    }
    if !c2.is_finite() || c2 <= T::zero() {
        return Err(Error::Invalid {
            context: "moment cap",
            reason: "c2 must be finite and positive".into(),
        });
    }
    let two = T::of(2.0);
    Ok((two * c1 + T::one()) / (two * c2))
}

/// Comparison solution of `y' = (2 c1 + 1) - 2 c2 y`, an upper bound for
/// `E|X(t)|^2` when `y(0) >= E|X(0)|^2`:
/// `y(t) = M* + (y0 - M*) e^{-2 c2 t}`.
pub fn gronwall_moment_bound<T: Real>(c1: T, c2: T, y0: T, t: T) -> Result<T> {
    let m_star = moment_cap(c1, c2)?;
    if !y0.is_finite() || y0 < T::zero() || !t.is_finite() || t < T::zero() {
        return Err(Error::Invalid {
            context: "moment comparison",
            reason: "y0 and t must be finite and nonnegative".into(),
        });
    }
    Ok(m_star + (y0 - m_star) * (-T::of(2.0) * c2 * t).exp())
}

/// Checks `E|X|^2 <= M*` on an empirical measure, with three standard
/// errors of statistical slack.
pub fn moment_bound_check<T: Real>(
    measure: &EmpiricalMeasure<T>,
    c1: T,
    c2: T,
) -> Result<BoundCheckReport<T>> {
    let m_star = moment_cap(c1, c2)?;
    let measured = measure.second_moment();
    let se = measure.second_moment_se();
    let mut constants = BTreeMap::new();
    constants.insert("c1".into(), c1);
    constants.insert("c2".into(), c2);
    constants.insert("m_star".into(), m_star);
    constants.insert("standard_error".into(), se);
    constants.insert("samples".into(), T::of_usize(measure.len()));
    Ok(BoundCheckReport::conclude(
        "stationary second moment",
        measured,
        m_star,
        T::of(3.0) * se,
        constants,
    ))
}

/// Tail bound `48 d^2 / z^4 + 4 c3^2 m d^2 / z^2` for one increment.
pub fn increment_tail_bound<T: Real>(z: T, delta: T, c3: T, second_moment_cap: T) -> Result<T> {
    if !z.is_finite() || z <= T::zero() || !delta.is_finite() || delta <= T::zero() {
        return Err(Error::Invalid {
            context: "increment tail",
            reason: "threshold and lag must be finite and positive".into(),
        });
    }
    let four = T::of(4.0);
    let z2 = z * z;
    let d2 = delta * delta;
    Ok(T::of(48.0) * d2 / (z2 * z2) + four * c3 * c3 * second_moment_cap * d2 / z2)
}

/// Empirical frequency of `|X(t2) - X(t1)| > z` across an ensemble (one
/// Bernoulli observation per trajectory, so the binomial standard error is
/// exact), checked against the tail bound plus three standard errors.
pub fn increment_tail_check<T: Real>(
    trajectories: &[Trajectory<T>],
    t1: T,
    t2: T,
    z: T,
    c3: T,
    second_moment_cap: T,
) -> Result<BoundCheckReport<T>> {
    if trajectories.is_empty() {
        return Err(Error::EmptySamples {
            context: "increment tail check needs trajectories",
        });
    }
    if !(t1 >= T::zero() && t2 > t1) {
        return Err(Error::Invalid {
            context: "increment tail",
            reason: "times must satisfy 0 <= t1 < t2".into(),
        });
    }
    let dt = trajectories[0].dt();
    let node_of = |t: T| -> Result<usize> {
        let ratio = t / dt;
        let rounded = ratio.round();
        if (ratio - rounded).abs() > T::of(1e-6) {
            return Err(Error::ShiftNotOnGrid {
                offset: t.as_f64(),
                dt: dt.as_f64(),
            });
        }
        Ok(rounded.to_usize().unwrap_or(0))
    };
    let (k1, k2) = (node_of(t1)?, node_of(t2)?);
    let delta = t2 - t1;
    let bound = increment_tail_bound(z, delta, c3, second_moment_cap)?;
    let mut exceedances = 0usize;
    for traj in trajectories {
        if k2 >= traj.nodes() {
            return Err(Error::Invalid {
                context: "increment tail",
                reason: "t2 exceeds the trajectory horizon".into(),
            });
        }
        let gap = traj
            .x_at(k1)
            .iter()
            .zip(traj.x_at(k2))
            .map(|(a, b)| (*a - *b) * (*a - *b))
            .sum::<T>()
            .sqrt();
        if gap > z {
            exceedances += 1;
        }
    }
    let total = trajectories.len();
    let freq = T::of_usize(exceedances) / T::of_usize(total);
    // binomial standard error at the bound's own rate (conservative when
    // the empirical rate is smaller)
    let p = freq.max(bound.min(T::one()));
    let se = (p * (T::one() - p).max(T::zero()) / T::of_usize(total)).sqrt();
    let mut constants = BTreeMap::new();
    constants.insert("z".into(), z);
    constants.insert("t1".into(), t1);
    constants.insert("t2".into(), t2);
    constants.insert("c3".into(), c3);
    constants.insert("m_star".into(), second_moment_cap);
    constants.insert("exceedances".into(), T::of_usize(exceedances));
    constants.insert("observations".into(), T::of_usize(total));
    Ok(BoundCheckReport::conclude(
        "increment tail",
        freq,
        bound,
        T::of(3.0) * se,
        constants,
    ))
}

/// Windowed path suprema against the growth envelope `K n^{1/2 + delta0}`,
/// plus the decay diagnostic `m_n / n^{1/2 + delta}` for the larger
/// exponent `delta > delta0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport<T> {
    pub k: T,
    /// Larger exponent: the trend ratios use `n^{1/2 + delta}`.
    pub delta: T,
    /// Smaller exponent: the violation envelope is `K n^{1/2 + delta0}`.
    pub delta0: T,
    /// `windows[n - 1]` is `sup { |X(t)| : t in [n, n + 1) }` on the grid.
    pub windows: Vec<T>,
    /// `trend[n - 1] = windows[n - 1] / n^{1/2 + delta}`; drifts to zero for
    /// paths in the sub-polynomial growth class.
    pub trend: Vec<T>,
    /// Window indices `n` whose supremum exceeds `K n^{1/2 + delta0}`.
    pub violations: Vec<usize>,
    pub flagged: bool,
}

impl<T: Real> GrowthReport<T> {
    #[must_use]
    pub fn envelope(&self, n: usize) -> T {
        self.k * T::of_usize(n).powf(T::of(0.5) + self.delta0)
    }

    /// Condenses the report into a worst-ratio bound check
    /// (`max_n m_n / envelope(n) <= 1`).
    #[must_use]
    pub fn to_bound_check(&self) -> BoundCheckReport<T> {
        let worst = self
            .windows
            .iter()
            .enumerate()
            .map(|(i, m)| *m / self.envelope(i + 1))
            .fold(T::zero(), |a, b| a.max(b));
        let mut constants = BTreeMap::new();
        constants.insert("k".into(), self.k);
        constants.insert("delta".into(), self.delta);
        constants.insert("delta0".into(), self.delta0);
        constants.insert("windows".into(), T::of_usize(self.windows.len()));
        constants.insert("violations".into(), T::of_usize(self.violations.len()));
        BoundCheckReport::conclude(
            "path growth envelope",
            worst,
            T::one(),
            T::zero(),
            constants,
        )
    }
}

/// Splits `[1, horizon)` into unit windows and compares each window's
/// supremum of `|X|` against `K n^{1/2 + delta0}`; requires
/// `0 < delta0 < delta`.
pub fn growth_diagnostic<T: Real>(
    trajectory: &Trajectory<T>,
    k: T,
    delta: T,
    delta0: T,
) -> Result<GrowthReport<T>> {
    if !k.is_finite() || k <= T::zero() {
        return Err(Error::Invalid {
            context: "growth diagnostic",
            reason: "K must be finite and positive".into(),
        });
    }
    if !delta.is_finite() || !delta0.is_finite() || delta0 <= T::zero() || delta0 >= delta {
        return Err(Error::Invalid {
            context: "growth diagnostic",
            reason: "exponents must satisfy 0 < delta0 < delta".into(),
        });
    }
    let dt = trajectory.dt();
    let horizon = trajectory.horizon();
    let last_window = horizon.as_f64().floor() as usize;
    if last_window < 2 {
        return Err(Error::Invalid {
            context: "growth diagnostic",
            reason: "horizon must cover at least the window [1, 2)".into(),
        });
    }
    let mut windows = Vec::with_capacity(last_window - 1);
    let mut trend = Vec::with_capacity(last_window - 1);
    let mut violations = Vec::new();
    for n in 1..last_window {
        let start = (T::of_usize(n) / dt).round().to_usize().unwrap_or(0);
        let end = (T::of_usize(n + 1) / dt)
            .round()
            .to_usize()
            .unwrap_or(0)
            .min(trajectory.nodes());
        let sup = (start..end).fold(T::zero(), |m, node| m.max(trajectory.norm_at(node)));
        let envelope = k * T::of_usize(n).powf(T::of(0.5) + delta0);
        if sup > envelope {
            violations.push(n);
        }
        trend.push(sup / T::of_usize(n).powf(T::of(0.5) + delta));
        windows.push(sup);
    }
    let flagged = !violations.is_empty();
    Ok(GrowthReport {
        k,
        delta,
        delta0,
        windows,
        trend,
        violations,
        flagged,
    })
}
