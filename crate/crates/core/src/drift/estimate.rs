//! Empirical verification of the structural drift conditions.
//!
//! Each drift family declares envelope constants; this module hunts for
//! counterexamples instead of trusting them.  Three probe campaigns run
//! against a drift `a`:
//!
//! * **Lipschitz.**  Pairs of pasts with equal endpoints, `x(0) = y(0)`,
//!   are sampled and the ratio
//!   `|a(x) - a(y)| / integral e^{lambda s} |x(s) - y(s)| ds`
//!   is maximised.  Deterministic "spike" pairs whose difference follows
//!   the kernel `e^{lambda s}` push the ratio towards its supremum.
//! * **Dissipativity.**  Probes report `g = (a(x), x(0))` against
//!   `u = |x(0)|^2`; a fit produces `(c1, c2)` with `g <= c1 - c2 u`,
//!   and a doubling ladder of memory-amplified pasts with small fixed
//!   endpoints detects drifts for which no envelope can exist.
//! * **Growth.**  The ratio `|a(x)| / |x(0)|` is maximised, and pasts with
//!   `x(0) = 0` but large memory expose drifts that are not dominated by
//!   the instantaneous state.
//!
//! All probes live on a finite grid window with nothing before it (zero
//! tail), so window quadrature and the drift's own kernel accumulators see
//! exactly the same data and the measured ratios are exact in the discrete
//! model, not approximations of a continuum limit.

use serde::{Deserialize, Serialize};

use crate::drift::{DeclaredConditions, DriftSpec};
use crate::error::{Error, Result};
use crate::history::{PastHistory, TailModel};
use crate::io::format_float;
use crate::noise::CounterRng;
use crate::real::Real;

/// Relative slack applied when comparing a measured constant against a
/// declared one; covers floating-point noise in the probe arithmetic.
pub const CONSISTENCY_TOL: f64 = 1e-9;

/// Probe-campaign sizes and discretisation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig<T> {
    /// Random equal-endpoint pairs for the Lipschitz campaign.
    pub pairs: usize,
    /// Random pasts for the dissipativity and growth campaigns.
    pub probes: usize,
    /// Doubling levels in the divergence ladders.
    pub ladder_levels: u32,
    pub seed: u64,
    pub grid_step: T,
    /// Length of the probe window in time units.
    pub window_seconds: T,
    /// Kernel rate for the Lipschitz metric; defaults to the drift's own
    /// memory rate (or 1 for memoryless drifts).
    pub rate_override: Option<T>,
}

impl<T: Real> SamplerConfig<T> {
    #[must_use]
    pub fn new() -> Self {
        Self {
            pairs: 2000,
            probes: 1000,
            ladder_levels: 8,
            seed: 7,
            grid_step: T::of(0.01),
            window_seconds: T::of(12.0),
            rate_override: None,
        }
    }

    /// Small campaign for fast unit tests.
    #[must_use]
    pub fn quick() -> Self {
        Self {
            pairs: 120,
            probes: 120,
            ladder_levels: 6,
            seed: 7,
            grid_step: T::of(0.02),
            window_seconds: T::of(8.0),
            rate_override: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.grid_step.is_finite() || self.grid_step <= T::zero() {
            return Err(Error::InvalidStep {
                got: self.grid_step.as_f64(),
            });
        }
        if !self.window_seconds.is_finite() || self.window_seconds < self.grid_step {
            return Err(Error::Invalid {
                context: "sampler config",
                reason: "window_seconds must cover at least one grid step".into(),
            });
        }
        Ok(())
    }

    /// Nodes in the probe window, including the endpoint at `s = 0`.
    fn nodes(&self) -> usize {
        let ratio = (self.window_seconds / self.grid_step).round();
        ratio.to_usize().unwrap_or(1) + 1
    }
}

impl<T: Real> Default for SamplerConfig<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Weighted distance `integral_{-W}^{0} e^{rate s} |x(s) - y(s)| ds` over a
/// shared grid window (trapezoid weights, matching the drift accumulators).
pub fn kernel_distance<T: Real>(
    dim: usize,
    grid_step: T,
    xs: &[T],
    ys: &[T],
    rate: T,
) -> Result<T> {
    if dim == 0 || xs.len() != ys.len() || !xs.len().is_multiple_of(dim) {
        return Err(Error::DimensionMismatch {
            expected: dim.max(1),
            got: xs.len(),
        });
    }
    let nodes = xs.len() / dim;
    if nodes < 2 {
        return Err(Error::EmptyWindow);
    }
    let half = T::of(0.5);
    let mut total = T::zero();
    for k in 0..nodes {
        let s = -grid_step * T::of_usize(nodes - 1 - k);
        let gap = euclid_gap(&xs[k * dim..(k + 1) * dim], &ys[k * dim..(k + 1) * dim]);
        let w = if k == 0 || k == nodes - 1 {
            grid_step * half
        } else {
            grid_step
        };
        total += w * (rate * s).exp() * gap;
    }
    Ok(total)
}

fn euclid_gap<T: Real>(x: &[T], y: &[T]) -> T {
    x.iter()
        .zip(y)
        .map(|(a, b)| (*a - *b) * (*a - *b))
        .sum::<T>()
        .sqrt()
}

fn euclid<T: Real>(x: &[T]) -> T {
    x.iter().map(|v| *v * *v).sum::<T>().sqrt()
}

fn dot<T: Real>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).map(|(a, b)| *a * *b).sum()
}

/// Evaluates the drift on a finite window with zero tail.
fn eval_window<T: Real>(spec: &DriftSpec<T>, grid_step: T, window: &[T]) -> Result<Vec<T>> {
    let mut history =
        PastHistory::from_window(spec.dim(), grid_step, window.to_vec(), TailModel::Zero)?;
    spec.register_kernels(&mut history)?;
    spec.evaluate(&history)
}

fn window_csv<T: Real>(grid_step: T, dim: usize, columns: &[(&str, &[T])]) -> String {
    let nodes = columns.first().map_or(0, |(_, v)| v.len() / dim);
    let mut out = String::from("s");
    for (name, _) in columns {
        for j in 1..=dim {
            out.push_str(&format!(",{name}_{j}"));
        }
    }
    out.push_str("\r\n");
    for k in 0..nodes {
        let s = -(grid_step * T::of_usize(nodes - 1 - k));
        out.push_str(&format_float(s.as_f64()));
        for (_, values) in columns {
            for j in 0..dim {
                out.push(',');
                out.push_str(&format_float(values[k * dim + j].as_f64()));
            }
        }
        out.push_str("\r\n");
    }
    out
}

// ---------------------------------------------------------------------------
// probe construction
// ---------------------------------------------------------------------------

/// Smooth random field: constant plus three trigonometric modes per
/// component, evaluated on the grid (unscaled).
fn random_smooth<T: Real>(rng: &mut CounterRng, dim: usize, nodes: usize, grid_step: T) -> Vec<T> {
    const MODES: usize = 3;
    let freqs: Vec<T> = (0..MODES)
        .map(|_| rng.uniform_in(T::of(0.3), T::of(3.0)))
        .collect();
    let mut coeffs = Vec::with_capacity(dim);
    for _ in 0..dim {
        let c: T = rng.gaussian();
        let modes: Vec<(T, T)> = (0..MODES)
            .map(|_| (rng.gaussian(), rng.gaussian()))
            .collect();
        coeffs.push((c, modes));
    }
    let mut values = vec![T::zero(); nodes * dim];
    for k in 0..nodes {
        let s = -grid_step * T::of_usize(nodes - 1 - k);
        for (j, (c, modes)) in coeffs.iter().enumerate() {
            let mut v = *c;
            for (m, (alpha, beta)) in modes.iter().enumerate() {
                let phase = freqs[m] * s;
                v += *alpha * phase.sin() + *beta * (phase.cos() - T::one());
            }
            values[k * dim + j] = v;
        }
    }
    values
}

fn sup_norm<T: Real>(dim: usize, values: &[T]) -> T {
    (0..values.len() / dim).fold(T::zero(), |m, k| {
        m.max(euclid(&values[k * dim..(k + 1) * dim]))
    })
}

fn scale_in_place<T: Real>(values: &mut [T], factor: T) {
    for v in values {
        *v *= factor;
    }
}

/// Random past with `sup_s |x(s)|` uniformly distributed in `(0, radius]`.
fn random_past<T: Real>(
    rng: &mut CounterRng,
    dim: usize,
    nodes: usize,
    grid_step: T,
    radius: T,
) -> Vec<T> {
    let mut values = random_smooth(rng, dim, nodes, grid_step);
    let sup = sup_norm(dim, &values);
    if sup > T::zero() {
        let target = radius * rng.uniform::<T>();
        scale_in_place(&mut values, target / sup);
    }
    values
}

/// Random perturbation vanishing exactly at `s = 0`: sine modes plus an
/// `e^{mu s} - 1` term, scaled to `sup <= radius / 2`.
fn anchored_perturbation<T: Real>(
    rng: &mut CounterRng,
    dim: usize,
    nodes: usize,
    grid_step: T,
    radius: T,
) -> Vec<T> {
    const MODES: usize = 3;
    let freqs: Vec<T> = (0..MODES)
        .map(|_| rng.uniform_in(T::of(0.3), T::of(3.0)))
        .collect();
    let mu = rng.uniform_in(T::of(0.2), T::of(1.5));
    let mut coeffs = Vec::with_capacity(dim);
    for _ in 0..dim {
        let modes: Vec<T> = (0..MODES).map(|_| rng.gaussian()).collect();
        let eta: T = rng.gaussian();
        coeffs.push((modes, eta));
    }
    let mut values = vec![T::zero(); nodes * dim];
    for k in 0..nodes {
        let s = -grid_step * T::of_usize(nodes - 1 - k);
        for (j, (modes, eta)) in coeffs.iter().enumerate() {
            let mut v = *eta * ((mu * s).exp() - T::one());
            for (m, alpha) in modes.iter().enumerate() {
                v += *alpha * (freqs[m] * s).sin();
            }
            values[k * dim + j] = v;
        }
    }
    let sup = sup_norm(dim, &values);
    if sup > T::zero() {
        let target = radius * T::of(0.5) * rng.uniform::<T>();
        scale_in_place(&mut values, target / sup);
    }
    values
}

/// Pair whose difference is a one-signed multiple of the kernel `e^{rate s}`
/// vanishing at the endpoint; drives Lipschitz ratios to their supremum.
fn spike_pair<T: Real>(
    dim: usize,
    nodes: usize,
    grid_step: T,
    radius: T,
    rate: T,
    endpoint_sign: T,
    bump_sign: T,
) -> (Vec<T>, Vec<T>) {
    let mut x = vec![T::zero(); nodes * dim];
    x[(nodes - 1) * dim] = endpoint_sign * radius;
    let mut y = x.clone();
    let delta = bump_sign * T::of(1e-3) * radius;
    for (k, chunk) in y.chunks_mut(dim).enumerate().take(nodes - 1) {
        let s = -grid_step * T::of_usize(nodes - 1 - k);
        chunk[0] += delta * (rate * s).exp();
    }
    (x, y)
}

/// Memory-amplified probe: `amplitude * e^{rate s}` on the window with the
/// endpoint pinned to a fixed small value (possibly zero).
fn amplified_memory_probe<T: Real>(
    dim: usize,
    nodes: usize,
    grid_step: T,
    rate: T,
    amplitude: T,
    endpoint: T,
) -> Vec<T> {
    let mut values = vec![T::zero(); nodes * dim];
    for k in 0..nodes - 1 {
        let s = -grid_step * T::of_usize(nodes - 1 - k);
        values[k * dim] = amplitude * (rate * s).exp();
    }
    values[(nodes - 1) * dim] = endpoint;
    values
}

fn constant_window<T: Real>(dim: usize, nodes: usize, level: T) -> Vec<T> {
    let mut values = vec![T::zero(); nodes * dim];
    for chunk in values.chunks_mut(dim) {
        chunk[0] = level;
    }
    values
}

// ---------------------------------------------------------------------------
// Lipschitz
// ---------------------------------------------------------------------------

/// The maximising pair of a Lipschitz campaign, complete enough to be
/// re-evaluated independently.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairWitness<T> {
    pub ratio: T,
    pub drift_gap: T,
    pub kernel_gap: T,
    pub rate: T,
    pub grid_step: T,
    pub dim: usize,
    /// Window of the first past, flattened oldest-first with stride `dim`.
    pub x_window: Vec<T>,
    pub y_window: Vec<T>,
    /// Same data rendered as CSV (`s,x_*,y_*`).
    pub csv: String,
}

impl<T: Real> PairWitness<T> {
    /// Recomputes the ratio from the stored windows; bitwise equal to
    /// `self.ratio` when the witness is genuine.
    pub fn reevaluate(&self, spec: &DriftSpec<T>) -> Result<T> {
        let ax = eval_window(spec, self.grid_step, &self.x_window)?;
        let ay = eval_window(spec, self.grid_step, &self.y_window)?;
        let den = kernel_distance(
            self.dim,
            self.grid_step,
            &self.x_window,
            &self.y_window,
            self.rate,
        )?;
        if den <= T::zero() {
            return Err(Error::DegenerateEstimate);
        }
        Ok(euclid_gap(&ax, &ay) / den)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate<T> {
    /// Kernel rate `lambda` used in the weighted distance.
    pub rate: T,
    /// Largest observed ratio; a lower bound for the true constant.
    pub k_hat: T,
    pub pairs: usize,
    /// `(k_hat - K) / (1 + K)` against the declared constant, if any.
    pub excess: Option<T>,
    pub witness: Option<PairWitness<T>>,
}

/// Maximises `|a(x) - a(y)| / integral e^{rate s}|x - y|` over random and
/// deterministic equal-endpoint pairs inside the endpoint ball of `radius`.
pub fn estimate_lipschitz<T: Real>(
    spec: &DriftSpec<T>,
    radius: T,
    declared: Option<T>,
    config: &SamplerConfig<T>,
) -> Result<LipschitzEstimate<T>> {
    config.validate()?;
    if !radius.is_finite() || radius <= T::zero() {
        return Err(Error::Invalid {
            context: "lipschitz estimate",
            reason: "radius must be positive and finite".into(),
        });
    }
    let dim = spec.dim();
    let nodes = config.nodes();
    let dt = config.grid_step;
    let rate = config
        .rate_override
        .or_else(|| spec.memory_rate())
        .unwrap_or_else(T::one);
    let mut rng = CounterRng::new(config.seed, 0xE57);
    let mut k_hat = T::zero();
    let mut witness: Option<PairWitness<T>> = None;
    let mut evaluated = 0usize;

    let mut consider = |x: Vec<T>, y: Vec<T>, witness: &mut Option<PairWitness<T>>| -> Result<()> {
        let den = kernel_distance(dim, dt, &x, &y, rate)?;
        if den <= T::of(1e-14) {
            return Ok(());
        }
        let ax = eval_window(spec, dt, &x)?;
        let ay = eval_window(spec, dt, &y)?;
        let num = euclid_gap(&ax, &ay);
        let ratio = num / den;
        evaluated += 1;
        if ratio > k_hat || witness.is_none() {
            k_hat = k_hat.max(ratio);
            *witness = Some(PairWitness {
                ratio,
                drift_gap: num,
                kernel_gap: den,
                rate,
                grid_step: dt,
                dim,
                csv: window_csv(dt, dim, &[("x", &x), ("y", &y)]),
                x_window: x,
                y_window: y,
            });
        }
        Ok(())
    };

    for _ in 0..config.pairs {
        let x = random_past(&mut rng, dim, nodes, dt, radius);
        let q = anchored_perturbation(&mut rng, dim, nodes, dt, radius);
        let y: Vec<T> = x.iter().zip(&q).map(|(a, b)| *a + *b).collect();
        consider(x, y, &mut witness)?;
    }
    for endpoint_sign in [T::one(), -T::one()] {
        for bump_sign in [T::one(), -T::one()] {
            let (x, y) = spike_pair(dim, nodes, dt, radius, rate, endpoint_sign, bump_sign);
            consider(x, y, &mut witness)?;
        }
    }
    if evaluated == 0 {
        return Err(Error::DegenerateEstimate);
    }
    let excess = declared.map(|k| (k_hat - k) / (T::one() + k));
    Ok(LipschitzEstimate {
        rate,
        k_hat,
        pairs: evaluated,
        excess,
        witness,
    })
}

// ---------------------------------------------------------------------------
// dissipativity and growth
// ---------------------------------------------------------------------------

/// A single stored probe, re-evaluable from its window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeWitness<T> {
    /// `"dissipativity-binding"`, `"dissipativity-violation"`,
    /// `"growth-binding"` or `"growth-violation"`.
    pub kind: String,
    /// `(a(x), x(0))` for dissipativity probes, `|a(x)|` for growth probes.
    pub value: T,
    pub endpoint_norm: T,
    pub grid_step: T,
    pub dim: usize,
    pub window: Vec<T>,
    pub csv: String,
}

impl<T: Real> ProbeWitness<T> {
    /// Recomputes `value` from the stored window; bitwise equal for a
    /// genuine witness.
    pub fn reevaluate(&self, spec: &DriftSpec<T>) -> Result<T> {
        let a = eval_window(spec, self.grid_step, &self.window)?;
        let endpoint = &self.window[self.window.len() - self.dim..];
        if self.kind.starts_with("dissipativity") {
            Ok(dot(&a, endpoint))
        } else {
            Ok(euclid(&a))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipativityEstimate<T> {
    /// Smallest observed envelope intercept: `max(0, max_i (a_i, x_i(0)))`.
    pub c1_hat: T,
    /// Steepest decay rate consistent with the probes, if any had a
    /// nonzero endpoint.
    pub c2_hat: Option<T>,
    /// True when the divergence ladder proves no envelope can hold.
    pub violated: bool,
    pub probes: usize,
    /// Worst normalised excess over the declared envelope, if one was given:
    /// `max_i ((a_i, x_i(0)) - C1 + C2 |x_i(0)|^2) / (1 + |C1| + C2 |x_i(0)|^2)`.
    pub excess: Option<T>,
    pub witness: Option<ProbeWitness<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate<T> {
    /// Largest observed ratio `|a(x)| / |x(0)|`.
    pub c3_hat: T,
    /// True when a zero-endpoint past produced a nonzero drift.
    pub violated: bool,
    pub probes: usize,
    /// Worst normalised excess over the declared constant, if one was given.
    pub excess: Option<T>,
    pub witness: Option<ProbeWitness<T>>,
}

/// Divergence-ladder windows tagged with their construction amplitude.
type Ladder<T> = Vec<(T, Vec<T>)>;

/// Probe suite shared by the dissipativity and growth campaigns: random
/// pasts, constant ladders along the first axis, and memory-amplified
/// exponential windows with pinned endpoints.
fn probe_suite<T: Real>(
    spec: &DriftSpec<T>,
    radius: T,
    rate: T,
    config: &SamplerConfig<T>,
    stream: u64,
    pinned_endpoint: T,
) -> (Vec<Vec<T>>, Ladder<T>) {
    let dim = spec.dim();
    let nodes = config.nodes();
    let dt = config.grid_step;
    let scale = radius.max(T::one());
    let mut rng = CounterRng::new(config.seed, stream);

    let mut baseline = vec![vec![T::zero(); nodes * dim]];
    for _ in 0..config.probes {
        baseline.push(random_past(&mut rng, dim, nodes, dt, radius));
    }
    for level in [0.25, 0.5, 1.0, 2.0, 5.0, 10.0] {
        for sign in [1.0, -1.0] {
            baseline.push(constant_window(dim, nodes, scale * T::of(level * sign)));
        }
    }

    // quadrupling amplitudes: a drift whose memory dependence is genuinely
    // unbounded beats any fixed envelope within a few rungs
    let mut ladder = Vec::new();
    for level in 0..config.ladder_levels {
        let amplitude = scale * T::of(4.0).powi(level as i32);
        for amp_sign in [T::one(), -T::one()] {
            if pinned_endpoint == T::zero() {
                ladder.push((
                    amplitude,
                    amplified_memory_probe(dim, nodes, dt, rate, amplitude * amp_sign, T::zero()),
                ));
            } else {
                for end_sign in [T::one(), -T::one()] {
                    ladder.push((
                        amplitude,
                        amplified_memory_probe(
                            dim,
                            nodes,
                            dt,
                            rate,
                            amplitude * amp_sign,
                            pinned_endpoint * end_sign,
                        ),
                    ));
                }
            }
        }
    }
    (baseline, ladder)
}

/// Fits an envelope `(a(x), x(0)) <= c1 - c2 |x(0)|^2` from probes and runs
/// the divergence ladder; checks the declared envelope when provided.
pub fn estimate_dissipativity<T: Real>(
    spec: &DriftSpec<T>,
    radius: T,
    declared: Option<(T, T)>,
    config: &SamplerConfig<T>,
) -> Result<DissipativityEstimate<T>> {
    config.validate()?;
    let dim = spec.dim();
    let dt = config.grid_step;
    let rate = config
        .rate_override
        .or_else(|| spec.memory_rate())
        .unwrap_or_else(T::one);
    let (baseline, ladder) = probe_suite(spec, radius, rate, config, 0xD155, T::of(0.1));

    let mut measured: Vec<(Vec<T>, T, T)> = Vec::with_capacity(baseline.len() + ladder.len());
    for window in baseline {
        let a = eval_window(spec, dt, &window)?;
        let endpoint = &window[window.len() - dim..];
        let g = dot(&a, endpoint);
        let u = dot(endpoint, endpoint);
        measured.push((window, g, u));
    }
    let c1_hat = measured
        .iter()
        .fold(T::zero(), |m, (_, g, _)| m.max(*g));
    let mut c2_hat: Option<T> = None;
    let mut binding: Option<usize> = None;
    for (i, (_, g, u)) in measured.iter().enumerate() {
        if *u > T::of(1e-12) {
            let slope = (c1_hat - *g) / *u;
            if c2_hat.is_none_or(|c| slope < c) {
                c2_hat = Some(slope);
                binding = Some(i);
            }
        }
    }

    let divergence_margin = c1_hat + c1_hat.max(T::one());
    let mut violated = false;
    let mut violation: Option<(Vec<T>, T, T)> = None;
    for (_, window) in ladder {
        let a = eval_window(spec, dt, &window)?;
        let endpoint = &window[window.len() - dim..];
        let g = dot(&a, endpoint);
        let u = dot(endpoint, endpoint);
        if g > divergence_margin && violation.is_none() {
            violated = true;
            violation = Some((window.clone(), g, u));
        }
        measured.push((window, g, u));
    }

    let excess = declared.map(|(c1, c2)| {
        measured.iter().fold(T::of(f64::NEG_INFINITY), |m, (_, g, u)| {
            m.max((*g - (c1 - c2 * *u)) / (T::one() + c1.abs() + c2 * *u))
        })
    });

    let witness = if let Some((window, g, _)) = violation {
        let endpoint = &window[window.len() - dim..];
        Some(ProbeWitness {
            kind: "dissipativity-violation".into(),
            value: g,
            endpoint_norm: euclid(endpoint),
            grid_step: dt,
            dim,
            csv: window_csv(dt, dim, &[("x", &window)]),
            window,
        })
    } else {
        binding.map(|i| {
            let (window, g, _) = measured[i].clone();
            let endpoint = &window[window.len() - dim..];
            ProbeWitness {
                kind: "dissipativity-binding".into(),
                value: g,
                endpoint_norm: euclid(endpoint),
                grid_step: dt,
                dim,
                csv: window_csv(dt, dim, &[("x", &window)]),
                window,
            }
        })
    };

    Ok(DissipativityEstimate {
        c1_hat,
        c2_hat,
        violated,
        probes: measured.len(),
        excess,
        witness,
    })
}

/// Maximises `|a(x)| / |x(0)|` and checks pasts with `x(0) = 0`; checks the
/// declared constant when provided.
pub fn estimate_growth<T: Real>(
    spec: &DriftSpec<T>,
    radius: T,
    declared: Option<T>,
    config: &SamplerConfig<T>,
) -> Result<GrowthEstimate<T>> {
    config.validate()?;
    let dim = spec.dim();
    let dt = config.grid_step;
    let rate = config
        .rate_override
        .or_else(|| spec.memory_rate())
        .unwrap_or_else(T::one);
    let (baseline, ladder) = probe_suite(spec, radius, rate, config, 0x6120, T::zero());

    let mut c3_hat = T::zero();
    let mut binding: Option<(Vec<T>, T)> = None;
    let mut excess = declared.map(|_| T::of(f64::NEG_INFINITY));
    let mut probes = 0usize;
    for window in &baseline {
        let a = eval_window(spec, dt, window)?;
        let endpoint = &window[window.len() - dim..];
        let norm_a = euclid(&a);
        let norm_x0 = euclid(endpoint);
        probes += 1;
        if let (Some(c3), Some(e)) = (declared, excess.as_mut()) {
            *e = e.max((norm_a - c3 * norm_x0) / (T::one() + c3 * norm_x0));
        }
        if norm_x0 > T::of(1e-9) {
            let ratio = norm_a / norm_x0;
            if ratio > c3_hat || binding.is_none() {
                c3_hat = c3_hat.max(ratio);
                binding = Some((window.clone(), norm_a));
            }
        }
    }

    let mut violated = false;
    let mut violation: Option<(Vec<T>, T)> = None;
    for (amplitude, window) in &ladder {
        let a = eval_window(spec, dt, window)?;
        let norm_a = euclid(&a);
        probes += 1;
        if norm_a > T::of(1e-9) * (T::one() + *amplitude) && violation.is_none() {
            violated = true;
            violation = Some((window.clone(), norm_a));
        }
        if let (Some(c3), Some(e)) = (declared, excess.as_mut()) {
            // zero endpoint: the envelope demands |a| = 0 here
            *e = e.max((norm_a - c3 * T::zero()) / T::one());
        }
    }

    let witness = violation.or(binding).map(|(window, value)| {
        let endpoint = &window[window.len() - dim..];
        ProbeWitness {
            kind: if violated {
                "growth-violation".into()
            } else {
                "growth-binding".into()
            },
            value,
            endpoint_norm: euclid(endpoint),
            grid_step: dt,
            dim,
            csv: window_csv(dt, dim, &[("x", &window)]),
            window,
        }
    });

    Ok(GrowthEstimate {
        c3_hat,
        violated,
        probes,
        excess,
        witness,
    })
}

// ---------------------------------------------------------------------------
// combined report
// ---------------------------------------------------------------------------

/// Results of all three campaigns against one drift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport<T> {
    pub label: String,
    pub dim: usize,
    pub radius: T,
    pub rate: T,
    pub declared: DeclaredConditions<T>,
    pub lipschitz: LipschitzEstimate<T>,
    pub dissipativity: DissipativityEstimate<T>,
    pub growth: GrowthEstimate<T>,
}

impl<T: Real> ConditionReport<T> {
    /// Human-readable descriptions of every condition that failed.
    #[must_use]
    pub fn failures(&self) -> Vec<String> {
        let tol = T::of(CONSISTENCY_TOL);
        let mut out = Vec::new();
        if let Some(excess) = self.lipschitz.excess {
            if excess > tol {
                out.push(format!(
                    "lipschitz: measured constant {} exceeds the declared {}",
                    format_float(self.lipschitz.k_hat.as_f64()),
                    format_float(self.declared.lipschitz.unwrap_or_else(T::zero).as_f64()),
                ));
            }
        }
        if self.dissipativity.violated {
            out.push(
                "dissipativity: memory-amplified probes diverge; no envelope c1 - c2|x(0)|^2 \
                 can dominate the drift"
                    .into(),
            );
        } else if let Some(excess) = self.dissipativity.excess {
            if excess > tol {
                out.push("dissipativity: a probe exceeds the declared envelope".into());
            }
        }
        if self.growth.violated {
            out.push(
                "growth: a past with x(0) = 0 produces a nonzero drift; no constant c3 \
                 with |a(x)| <= c3|x(0)| exists"
                    .into(),
            );
        } else if let Some(excess) = self.growth.excess {
            if excess > tol {
                out.push("growth: a probe exceeds the declared constant".into());
            }
        }
        out
    }

    #[must_use]
    pub fn all_hold(&self) -> bool {
        self.failures().is_empty()
    }
}

/// Runs all three campaigns with the declared constants of `spec` at the
/// given endpoint radius.
pub fn condition_report<T: Real>(
    spec: &DriftSpec<T>,
    radius: T,
    config: &SamplerConfig<T>,
) -> Result<ConditionReport<T>> {
    let declared = spec.declared_conditions(radius);
    let lipschitz = estimate_lipschitz(spec, radius, declared.lipschitz, config)?;
    let dissipativity = estimate_dissipativity(spec, radius, declared.dissipativity, config)?;
    let growth = estimate_growth(spec, radius, declared.growth, config)?;
    Ok(ConditionReport {
        label: spec.label(),
        dim: spec.dim(),
        radius,
        rate: lipschitz.rate,
        declared,
        lipschitz,
        dissipativity,
        growth,
    })
}
