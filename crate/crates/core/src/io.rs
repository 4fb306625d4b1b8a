//! Deterministic text artifacts: CSV tables, JSON documents and
//! gnuplot-style `.dat` files.
//!
//! Every builder returns the complete file contents as a `String`, so
//! callers can hash, byte-compare or write the result in one shot.  Floats
//! are printed with `{:.16e}` — 17 significant digits, enough to round-trip
//! any finite `f64` — making each artifact a pure function of the data,
//! independent of platform, locale and thread count.
//!
//! Conventions:
//! * CSV follows RFC 4180: comma-separated cells, `\r\n` row terminators and
//!   a header row.  Cells never need quoting because they contain only
//!   numbers, identifiers and blanks.
//! * JSON uses the struct declaration order of its source types (maps are
//!   `BTreeMap`s throughout the crate) and ends with a newline.
//! * `.dat` tables are whitespace-separated with `#`-prefixed header lines.

use serde::Serialize;

use crate::drift::DriftSpec;
use crate::error::{Error, Result};
use crate::girsanov::{CouplingReport, DiscrepancyProfile, SeparationEnvelope};
use crate::history::PathRecord;
use crate::integrate::Trajectory;
use crate::real::Real;
use crate::stationary::checks::GrowthReport;
use crate::stationary::EmpiricalMeasure;

/// Formats a float with 17 significant digits (`{:.16e}`), which restores
/// the exact bit pattern on parse.
#[must_use]
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn cell<T: Real>(v: T) -> String {
    format_float(v.as_f64())
}

fn csv_row(cells: &[String]) -> String {
    let mut row = cells.join(",");
    row.push_str("\r\n");
    row
}

fn indexed_header(prefix: &str, dim: usize) -> Vec<String> {
    (1..=dim).map(|j| format!("{prefix}_{j}")).collect()
}

/// CSV for a simulated trajectory: columns `t, x_1..x_d, w_1..w_d`, one row
/// per grid node in ascending time.
#[must_use]
pub fn trajectory_csv<T: Real>(traj: &Trajectory<T>) -> String {
    let dim = traj.dim();
    let mut header = vec!["t".to_string()];
    header.extend(indexed_header("x", dim));
    header.extend(indexed_header("w", dim));
    let mut out = csv_row(&header);
    for k in 0..traj.nodes() {
        let mut cells = Vec::with_capacity(1 + 2 * dim);
        cells.push(cell(traj.dt() * T::of_usize(k)));
        cells.extend(traj.x_at(k).iter().map(|v| cell(*v)));
        cells.extend(traj.w_at(k).iter().map(|v| cell(*v)));
        out.push_str(&csv_row(&cells));
    }
    out
}

#[derive(Serialize)]
struct TrajectorySidecar<'a, T> {
    seed: u64,
    stream: u64,
    dt: T,
    #[serde(rename = "T")]
    horizon: T,
    tau_r_hit: Option<TauRHit<T>>,
    drift_spec: &'a DriftSpec<T>,
}

#[derive(Serialize)]
struct TauRHit<T> {
    node: usize,
    time: T,
    radius: T,
}

/// JSON sidecar describing how a trajectory was produced.
pub fn trajectory_sidecar<T: Real + Serialize>(traj: &Trajectory<T>) -> Result<String> {
    let sidecar = TrajectorySidecar {
        seed: traj.seed,
        stream: traj.stream,
        dt: traj.dt(),
        horizon: traj.horizon(),
        tau_r_hit: traj.tau_r.as_ref().map(|hit| TauRHit {
            node: hit.node,
            time: traj.dt() * T::of_usize(hit.node),
            radius: hit.radius,
        }),
        drift_spec: &traj.drift,
    };
    to_json_pretty(&sidecar)
}

/// CSV for a path record: columns `t, x_1..x_d, w_1..w_d`, time ascending
/// over the union of the stored state and noise ranges.  Cells outside a
/// component's domain are left blank, so a spliced record shows its past
/// states with empty noise columns.
#[must_use]
pub fn record_csv<T: Real>(rec: &PathRecord<T>) -> String {
    let dim = rec.dim();
    let (x_lo, x_hi) = rec.x_range();
    let (w_lo, w_hi) = rec.w_range();
    let lo = x_lo.min(w_lo);
    let hi = x_hi.max(w_hi);
    let mut header = vec!["t".to_string()];
    header.extend(indexed_header("x", dim));
    header.extend(indexed_header("w", dim));
    let mut out = csv_row(&header);
    for idx in lo..=hi {
        let mut cells = Vec::with_capacity(1 + 2 * dim);
        cells.push(cell(rec.time_of(idx)));
        match rec.x_at(idx) {
            Some(x) => cells.extend(x.iter().map(|v| cell(*v))),
            None => cells.extend(std::iter::repeat_n(String::new(), dim)),
        }
        match rec.w_at(idx) {
            Some(w) => cells.extend(w.iter().map(|v| cell(*v))),
            None => cells.extend(std::iter::repeat_n(String::new(), dim)),
        }
        out.push_str(&csv_row(&cells));
    }
    out
}

/// CSV for an empirical measure: header `x_1..x_d`, one sample per row in
/// capture order.
#[must_use]
pub fn measure_csv<T: Real>(measure: &EmpiricalMeasure<T>) -> String {
    let dim = measure.dim();
    let mut out = csv_row(&indexed_header("x", dim));
    for k in 0..measure.len() {
        let cells: Vec<String> = measure.sample(k).iter().map(|v| cell(*v)).collect();
        out.push_str(&csv_row(&cells));
    }
    out
}

fn dat_table(comments: &[String], columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for line in comments {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str("# ");
    out.push_str(&columns.join("  "));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join("  "));
        out.push('\n');
    }
    out
}

/// Plot table for a drift discrepancy profile: time, discrepancy norm and
/// the exponential envelope it must stay under.
#[must_use]
pub fn discrepancy_dat<T: Real>(
    profile: &DiscrepancyProfile<T>,
    envelope: &SeparationEnvelope<T>,
) -> String {
    let rows: Vec<Vec<String>> = (0..profile.len())
        .map(|k| {
            let t = profile.dt() * T::of_usize(k);
            vec![cell(t), cell(profile.norm_at(k)), cell(envelope.at(t))]
        })
        .collect();
    dat_table(
        &[format!(
            "drift discrepancy profile, envelope scale {} rate {}",
            cell(envelope.scale()),
            cell(envelope.separation_rate),
        )],
        &["t", "discrepancy", "envelope"],
        &rows,
    )
}

/// Plot table for a coupling run: time, gap between the coupled solutions
/// and the single-path calibration scale for comparison.
#[must_use]
pub fn coupling_dat<T: Real>(report: &CouplingReport<T>) -> String {
    let n = report.gap_profile.len();
    let dt = if n > 1 {
        report.horizon / T::of_usize(n - 1)
    } else {
        T::zero()
    };
    let rows: Vec<Vec<String>> = report
        .gap_profile
        .iter()
        .enumerate()
        .map(|(k, gap)| {
            vec![
                cell(dt * T::of_usize(k)),
                cell(*gap),
                cell(report.calibration_sd),
            ]
        })
        .collect();
    dat_table(
        &[format!(
            "coupling gap profile over [0, {}], calibration over {} replicas",
            cell(report.horizon),
            report.calibration_replicas,
        )],
        &["t", "gap", "calibration_sd"],
        &rows,
    )
}

/// Plot table for a growth diagnostic: window index, running supremum,
/// allowed envelope and the normalized trend that should decay.
#[must_use]
pub fn growth_dat<T: Real>(report: &GrowthReport<T>) -> String {
    let rows: Vec<Vec<String>> = report
        .windows
        .iter()
        .zip(&report.trend)
        .enumerate()
        .map(|(i, (m, trend))| {
            let n = i + 1;
            vec![
                n.to_string(),
                cell(*m),
                cell(report.envelope(n)),
                cell(*trend),
            ]
        })
        .collect();
    dat_table(
        &[format!(
            "window suprema vs envelope K n^(1/2+delta0), K = {}, delta0 = {}, trend m_n / n^(1/2+delta), delta = {}",
            cell(report.k),
            cell(report.delta0),
            cell(report.delta),
        )],
        &["n", "m_n", "envelope", "trend"],
        &rows,
    )
}

/// Pretty JSON with a trailing newline.  Key order follows the struct
/// declaration (or `BTreeMap` order), so the output is deterministic.
pub fn to_json_pretty<V: Serialize>(value: &V) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Invalid {
        context: "json serialization",
        reason: e.to_string(),
    })?;
    text.push('\n');
    Ok(text)
}
