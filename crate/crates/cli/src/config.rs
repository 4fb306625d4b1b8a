//! Structured run configuration.
//!
//! One TOML file holds every constant an experiment needs: the drift family
//! and its parameters, the integration grid, check thresholds, change-of-
//! measure envelopes, coupling functionals and named past definitions.  The
//! parser is a schema walker over [`toml::Value`] rather than a direct serde
//! deserialize: it collects *every* field-level problem (unknown keys, type
//! mismatches, constraint violations) with its dotted path instead of
//! stopping at the first, so a rejected config reads like a review, not a
//! scavenger hunt.
//!
//! A parsed [`RunConfig`] serializes back to TOML with all defaults
//! materialised; parse → serialize → parse is the identity.

use std::collections::BTreeMap;
use std::fmt;

use memsde_core::drift::DriftSpec;
use memsde_core::history::{ExpTerm, PastHistory};
use memsde_core::stationary::SamplingMode;
use serde::Serialize;
use toml::value::Table;
use toml::Value;

/// One field-level configuration problem, located by its dotted path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Families accepted under `drift.family`.
pub const FAMILIES: [&str; 3] = ["ou", "modulated_damping", "linear_distributed_delay"];
/// Values accepted under `sim.sampling`.
pub const SAMPLING_MODES: [&str; 2] = ["uniform_time", "terminal"];
/// Values accepted in `output.formats`.
pub const FORMATS: [&str; 3] = ["csv", "json", "dat"];
/// Values accepted under `pasts.<name>.kind`.
pub const PAST_KINDS: [&str; 3] = ["zero", "constant", "exponential_sum"];

/// `[drift]`: the family and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftSection {
    pub family: String,
    pub b: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub dimension: usize,
}

/// `[sim]`: integration grid, ensemble size and stopping radius.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimSection {
    /// Time horizon; TOML key `T`.
    #[serde(rename = "T")]
    pub horizon: f64,
    pub dt: f64,
    /// Ensemble size / replica count.
    pub n: usize,
    pub seed: u64,
    /// Optional stopping radius `r`: trajectories record the first exit time.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Stored past window length `T_w` in time units.
    pub window: f64,
    /// Name of the initial past in `[pasts]`; zero history when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
    /// `uniform_time` (time averaging) or `terminal`.
    pub sampling: String,
}

/// `[checks]`: thresholds for the bound and growth diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChecksSection {
    /// Increment-tail thresholds `z`.
    pub z: Vec<f64>,
    /// Increment-tail lags.
    pub delta_t: Vec<f64>,
    /// Growth diagnostic margin `delta`.
    pub delta: f64,
    /// Growth diagnostic exponent offset `delta0 < delta`.
    pub delta0: f64,
    /// Growth diagnostic prefactor `K`.
    pub k_window: f64,
    /// Random projections for Wasserstein-1 comparisons.
    pub projections: usize,
    /// Endpoint radius for condition estimation.
    pub radius: f64,
}

/// `[girsanov]`: separation envelope and density-sampling sizes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GirsanovSection {
    /// Separation growth rate `lambda'`; must stay below `drift.lambda`.
    pub lambda_prime: f64,
    /// Separation amplitude `K'`.
    pub k_prime: f64,
    /// Horizon of the change-of-measure experiment.
    pub horizon: f64,
    pub replicas: usize,
    /// Name of the reference past in `[pasts]`.
    pub past_x: String,
    /// Name of the comparison past; must share the endpoint of `past_x`.
    pub past_y: String,
}

/// `[couple]`: shared-noise coupling functional and calibration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoupleSection {
    /// Moving-average window of the ergodic functional.
    pub f_window: f64,
    /// Clamp bound of the ergodic functional.
    pub f_clamp: f64,
    /// Time discarded before averaging.
    pub burn_in: f64,
    /// Independent seeds used to calibrate the average's spread.
    pub calibration: usize,
    pub past_x: String,
    pub past_y: String,
}

/// `[output]`: artifact directory and formats.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputSection {
    pub directory: String,
    pub formats: Vec<String>,
}

/// One named entry under `[pasts.<name>]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PastDef {
    /// `zero`, `constant` or `exponential_sum`.
    pub kind: String,
    /// Constant value; required iff `kind = "constant"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<Vec<f64>>,
    /// Exponential terms; required iff `kind = "exponential_sum"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<TermDef>>,
}

/// One exponential component `amplitude * e^{rate |s|}` of a past.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TermDef {
    pub amplitude: Vec<f64>,
    pub rate: f64,
}

/// A fully validated experiment description.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub drift: DriftSection,
    pub sim: SimSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<ChecksSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub girsanov: Option<GirsanovSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub couple: Option<CoupleSection>,
    pub output: OutputSection,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub pasts: BTreeMap<String, PastDef>,
}

impl RunConfig {
    /// Serializes with all defaults materialised; reparsing yields `self`.
    #[must_use]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("a validated run config serializes to TOML")
    }

    /// The configured drift family.
    pub fn drift_spec(&self) -> memsde_core::Result<DriftSpec<f64>> {
        let d = &self.drift;
        match d.family.as_str() {
            "ou" => DriftSpec::ou(d.b, d.dimension),
            "modulated_damping" => DriftSpec::modulated_damping(
                d.b,
                d.epsilon.expect("validated: epsilon present"),
                d.lambda.expect("validated: lambda present"),
                d.dimension,
            ),
            "linear_distributed_delay" => DriftSpec::linear_distributed_delay(
                d.b,
                d.kappa.expect("validated: kappa present"),
                d.lambda.expect("validated: lambda present"),
                d.dimension,
            ),
            other => unreachable!("validated family `{other}`"),
        }
    }

    /// Stored window size in grid steps.
    #[must_use]
    pub fn window_steps(&self) -> usize {
        ((self.sim.window / self.sim.dt).round() as usize).max(1)
    }

    #[must_use]
    pub fn sampling_mode(&self) -> SamplingMode {
        match self.sim.sampling.as_str() {
            "terminal" => SamplingMode::Terminal,
            _ => SamplingMode::UniformTime,
        }
    }

    /// Builds the named past on the configured grid.
    ///
    /// # Panics
    /// If `name` is not in `[pasts]`; parse-time validation guarantees every
    /// referenced name resolves.
    pub fn named_past(&self, name: &str) -> memsde_core::Result<PastHistory<f64>> {
        self.pasts[name].build(self.drift.dimension, self.sim.dt, self.window_steps())
    }

    /// The initial history: `sim.initial` when set, else the zero past.
    pub fn initial_history(&self) -> memsde_core::Result<PastHistory<f64>> {
        match &self.sim.initial {
            Some(name) => self.named_past(name),
            None => PastHistory::zero(self.drift.dimension, self.sim.dt, self.window_steps()),
        }
    }
}

impl PastDef {
    /// Materialises the definition as a grid history.
    ///
    /// # Panics
    /// If the kind-specific payload is missing; parse-time validation
    /// guarantees it is present.
    pub fn build(
        &self,
        dim: usize,
        grid_step: f64,
        window_steps: usize,
    ) -> memsde_core::Result<PastHistory<f64>> {
        match self.kind.as_str() {
            "zero" => PastHistory::zero(dim, grid_step, window_steps),
            "constant" => PastHistory::constant(
                self.value.as_ref().expect("validated: value present"),
                grid_step,
                window_steps,
            ),
            "exponential_sum" => {
                let terms = self
                    .terms
                    .as_ref()
                    .expect("validated: terms present")
                    .iter()
                    .map(|t| ExpTerm::new(t.amplitude.clone(), t.rate))
                    .collect();
                PastHistory::analytic(dim, grid_step, window_steps, terms)
            }
            other => unreachable!("validated past kind `{other}`"),
        }
    }

    /// Value of the past at `s = 0`.
    #[must_use]
    pub fn endpoint(&self, dim: usize) -> Vec<f64> {
        match self.kind.as_str() {
            "constant" => self.value.clone().unwrap_or_else(|| vec![0.0; dim]),
            "exponential_sum" => {
                let mut out = vec![0.0; dim];
                for term in self.terms.as_deref().unwrap_or_default() {
                    for (o, a) in out.iter_mut().zip(&term.amplitude) {
                        *o += *a;
                    }
                }
                out
            }
            _ => vec![0.0; dim],
        }
    }
}

// ---------------------------------------------------------------------------
// walker helpers
// ---------------------------------------------------------------------------

fn join(parent: &str, key: &str) -> String {
    if parent.is_empty() {
        key.to_string()
    } else {
        format!("{parent}.{key}")
    }
}

fn push(errors: &mut Vec<FieldError>, path: impl Into<String>, message: impl Into<String>) {
    errors.push(FieldError {
        path: path.into(),
        message: message.into(),
    });
}

fn as_table<'a>(value: &'a Value, path: &str, errors: &mut Vec<FieldError>) -> Option<&'a Table> {
    match value.as_table() {
        Some(t) => Some(t),
        None => {
            push(
                errors,
                path,
                format!("expected a table, found {}", value.type_str()),
            );
            None
        }
    }
}

fn reject_unknown(table: &Table, path: &str, allowed: &[&str], errors: &mut Vec<FieldError>) {
    for key in table.keys() {
        if !allowed.contains(&key.as_str()) {
            push(errors, join(path, key), format!("unknown key `{key}`"));
        }
    }
}

fn number_of(value: &Value) -> Option<f64> {
    match value {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn opt_f64(table: &Table, path: &str, key: &str, errors: &mut Vec<FieldError>) -> Option<f64> {
    let value = table.get(key)?;
    match number_of(value) {
        Some(v) => Some(v),
        None => {
            push(
                errors,
                join(path, key),
                format!("expected a number, found {}", value.type_str()),
            );
            None
        }
    }
}

fn req_f64(table: &Table, path: &str, key: &str, errors: &mut Vec<FieldError>) -> Option<f64> {
    if !table.contains_key(key) {
        push(errors, join(path, key), "missing required key");
        return None;
    }
    opt_f64(table, path, key, errors)
}

fn opt_usize(table: &Table, path: &str, key: &str, errors: &mut Vec<FieldError>) -> Option<usize> {
    let value = table.get(key)?;
    match value.as_integer() {
        Some(i) if i >= 0 => Some(i as usize),
        Some(_) => {
            push(errors, join(path, key), "must be a nonnegative integer");
            None
        }
        None => {
            push(
                errors,
                join(path, key),
                format!("expected an integer, found {}", value.type_str()),
            );
            None
        }
    }
}

fn req_usize(table: &Table, path: &str, key: &str, errors: &mut Vec<FieldError>) -> Option<usize> {
    if !table.contains_key(key) {
        push(errors, join(path, key), "missing required key");
        return None;
    }
    opt_usize(table, path, key, errors)
}

fn req_u64(table: &Table, path: &str, key: &str, errors: &mut Vec<FieldError>) -> Option<u64> {
    req_usize(table, path, key, errors).map(|v| v as u64)
}

fn opt_string(table: &Table, path: &str, key: &str, errors: &mut Vec<FieldError>) -> Option<String> {
    let value = table.get(key)?;
    match value.as_str() {
        Some(s) => Some(s.to_string()),
        None => {
            push(
                errors,
                join(path, key),
                format!("expected a string, found {}", value.type_str()),
            );
            None
        }
    }
}

fn req_string(table: &Table, path: &str, key: &str, errors: &mut Vec<FieldError>) -> Option<String> {
    if !table.contains_key(key) {
        push(errors, join(path, key), "missing required key");
        return None;
    }
    opt_string(table, path, key, errors)
}

fn number_array(value: &Value, path: &str, errors: &mut Vec<FieldError>) -> Option<Vec<f64>> {
    let Some(items) = value.as_array() else {
        push(
            errors,
            path,
            format!("expected an array of numbers, found {}", value.type_str()),
        );
        return None;
    };
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        match number_of(item) {
            Some(v) => out.push(v),
            None => {
                push(
                    errors,
                    format!("{path}[{i}]"),
                    format!("expected a number, found {}", item.type_str()),
                );
                return None;
            }
        }
    }
    Some(out)
}

fn req_number_array(
    table: &Table,
    path: &str,
    key: &str,
    errors: &mut Vec<FieldError>,
) -> Option<Vec<f64>> {
    let full = join(path, key);
    let Some(value) = table.get(key) else {
        push(errors, full, "missing required key");
        return None;
    };
    number_array(value, &full, errors)
}

/// Records an error unless `v` is finite and strictly positive.
fn positive(v: f64, path: &str, errors: &mut Vec<FieldError>) -> Option<f64> {
    if v.is_finite() && v > 0.0 {
        Some(v)
    } else {
        push(errors, path, "must be finite and positive");
        None
    }
}

// ---------------------------------------------------------------------------
// section parsers
// ---------------------------------------------------------------------------

fn parse_drift(value: &Value, errors: &mut Vec<FieldError>) -> Option<DriftSection> {
    let table = as_table(value, "drift", errors)?;
    reject_unknown(
        table,
        "drift",
        &["family", "b", "epsilon", "kappa", "lambda", "dimension"],
        errors,
    );
    let family = req_string(table, "drift", "family", errors)?;
    let b = req_f64(table, "drift", "b", errors).and_then(|v| positive(v, "drift.b", errors));
    let epsilon = opt_f64(table, "drift", "epsilon", errors);
    let kappa = opt_f64(table, "drift", "kappa", errors);
    let lambda = opt_f64(table, "drift", "lambda", errors);
    let dimension = match opt_usize(table, "drift", "dimension", errors) {
        Some(0) => {
            push(errors, "drift.dimension", "must be at least 1");
            1
        }
        Some(d) => d,
        None => 1,
    };

    let unused = |key: &str, present: bool, errors: &mut Vec<FieldError>| {
        if present {
            push(
                errors,
                join("drift", key),
                format!("not used by the {family} family"),
            );
        }
    };
    let required = |key: &str, v: Option<f64>, errors: &mut Vec<FieldError>| {
        if v.is_none() && !table.contains_key(key) {
            push(
                errors,
                join("drift", key),
                format!("required by the {family} family"),
            );
        }
        v
    };

    match family.as_str() {
        "ou" => {
            unused("epsilon", table.contains_key("epsilon"), errors);
            unused("kappa", table.contains_key("kappa"), errors);
            unused("lambda", table.contains_key("lambda"), errors);
        }
        "modulated_damping" => {
            unused("kappa", table.contains_key("kappa"), errors);
            if let Some(e) = required("epsilon", epsilon, errors) {
                if !(e.is_finite() && (0.0..1.0).contains(&e)) {
                    push(errors, "drift.epsilon", "must lie in [0, 1)");
                }
            }
            if let Some(l) = required("lambda", lambda, errors) {
                positive(l, "drift.lambda", errors);
            }
        }
        "linear_distributed_delay" => {
            unused("epsilon", table.contains_key("epsilon"), errors);
            if let Some(k) = required("kappa", kappa, errors) {
                if !k.is_finite() {
                    push(errors, "drift.kappa", "must be finite");
                }
            }
            if let Some(l) = required("lambda", lambda, errors) {
                positive(l, "drift.lambda", errors);
            }
        }
        other => {
            push(
                errors,
                "drift.family",
                format!(
                    "unknown family `{other}`; expected one of {}",
                    FAMILIES.join(", ")
                ),
            );
            return None;
        }
    }

    Some(DriftSection {
        family,
        b: b?,
        epsilon,
        kappa,
        lambda,
        dimension,
    })
}

fn parse_sim(value: &Value, errors: &mut Vec<FieldError>) -> Option<SimSection> {
    let table = as_table(value, "sim", errors)?;
    reject_unknown(
        table,
        "sim",
        &["T", "dt", "n", "seed", "radius", "window", "initial", "sampling"],
        errors,
    );
    let horizon = req_f64(table, "sim", "T", errors).and_then(|v| positive(v, "sim.T", errors));
    let dt = req_f64(table, "sim", "dt", errors).and_then(|v| positive(v, "sim.dt", errors));
    if let (Some(t), Some(s)) = (horizon, dt) {
        if s > t {
            push(errors, "sim.dt", "must not exceed T");
        }
    }
    let n = match req_usize(table, "sim", "n", errors) {
        Some(0) => {
            push(errors, "sim.n", "must be at least 1");
            None
        }
        other => other,
    };
    let seed = req_u64(table, "sim", "seed", errors);
    let radius =
        opt_f64(table, "sim", "radius", errors).and_then(|v| positive(v, "sim.radius", errors));
    let window =
        req_f64(table, "sim", "window", errors).and_then(|v| positive(v, "sim.window", errors));
    let initial = opt_string(table, "sim", "initial", errors);
    let sampling = match opt_string(table, "sim", "sampling", errors) {
        Some(s) if SAMPLING_MODES.contains(&s.as_str()) => s,
        Some(s) => {
            push(
                errors,
                "sim.sampling",
                format!(
                    "unknown mode `{s}`; expected one of {}",
                    SAMPLING_MODES.join(", ")
                ),
            );
            s
        }
        None => "uniform_time".to_string(),
    };

    Some(SimSection {
        horizon: horizon?,
        dt: dt?,
        n: n?,
        seed: seed?,
        radius,
        window: window?,
        initial,
        sampling,
    })
}

fn parse_checks(value: &Value, errors: &mut Vec<FieldError>) -> Option<ChecksSection> {
    let table = as_table(value, "checks", errors)?;
    reject_unknown(
        table,
        "checks",
        &["z", "delta_t", "delta", "delta0", "k_window", "projections", "radius"],
        errors,
    );
    let all_positive = |list: Option<Vec<f64>>, path: &str, errors: &mut Vec<FieldError>| {
        let list = list?;
        if list.is_empty() {
            push(errors, path, "must contain at least one value");
            return None;
        }
        if list.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            push(errors, path, "every entry must be finite and positive");
            return None;
        }
        Some(list)
    };
    let z = req_number_array(table, "checks", "z", errors);
    let z = all_positive(z, "checks.z", errors);
    let delta_t = req_number_array(table, "checks", "delta_t", errors);
    let delta_t = all_positive(delta_t, "checks.delta_t", errors);
    let delta = req_f64(table, "checks", "delta", errors)
        .and_then(|v| positive(v, "checks.delta", errors));
    let delta0 = req_f64(table, "checks", "delta0", errors);
    if let (Some(d), Some(d0)) = (delta, delta0) {
        if !(d0.is_finite() && d0 > 0.0 && d0 < d) {
            push(errors, "checks.delta0", "must satisfy 0 < delta0 < delta");
        }
    }
    let k_window = req_f64(table, "checks", "k_window", errors)
        .and_then(|v| positive(v, "checks.k_window", errors));
    let projections = match opt_usize(table, "checks", "projections", errors) {
        Some(0) => {
            push(errors, "checks.projections", "must be at least 1");
            64
        }
        Some(p) => p,
        None => 64,
    };
    let radius = match opt_f64(table, "checks", "radius", errors) {
        Some(r) => positive(r, "checks.radius", errors).unwrap_or(1.0),
        None => 1.0,
    };

    Some(ChecksSection {
        z: z?,
        delta_t: delta_t?,
        delta: delta?,
        delta0: delta0?,
        k_window: k_window?,
        projections,
        radius,
    })
}

fn parse_girsanov(value: &Value, errors: &mut Vec<FieldError>) -> Option<GirsanovSection> {
    let table = as_table(value, "girsanov", errors)?;
    reject_unknown(
        table,
        "girsanov",
        &["lambda_prime", "k_prime", "horizon", "replicas", "past_x", "past_y"],
        errors,
    );
    let lambda_prime = req_f64(table, "girsanov", "lambda_prime", errors)
        .and_then(|v| positive(v, "girsanov.lambda_prime", errors));
    let k_prime = req_f64(table, "girsanov", "k_prime", errors)
        .and_then(|v| positive(v, "girsanov.k_prime", errors));
    let horizon = req_f64(table, "girsanov", "horizon", errors)
        .and_then(|v| positive(v, "girsanov.horizon", errors));
    let replicas = match opt_usize(table, "girsanov", "replicas", errors) {
        Some(0) => {
            push(errors, "girsanov.replicas", "must be at least 1");
            10_000
        }
        Some(r) => r,
        None => 10_000,
    };
    let past_x = req_string(table, "girsanov", "past_x", errors);
    let past_y = req_string(table, "girsanov", "past_y", errors);

    Some(GirsanovSection {
        lambda_prime: lambda_prime?,
        k_prime: k_prime?,
        horizon: horizon?,
        replicas,
        past_x: past_x?,
        past_y: past_y?,
    })
}

fn parse_couple(value: &Value, errors: &mut Vec<FieldError>) -> Option<CoupleSection> {
    let table = as_table(value, "couple", errors)?;
    reject_unknown(
        table,
        "couple",
        &["f_window", "f_clamp", "burn_in", "calibration", "past_x", "past_y"],
        errors,
    );
    let f_window = req_f64(table, "couple", "f_window", errors)
        .and_then(|v| positive(v, "couple.f_window", errors));
    let f_clamp = req_f64(table, "couple", "f_clamp", errors)
        .and_then(|v| positive(v, "couple.f_clamp", errors));
    let burn_in = match req_f64(table, "couple", "burn_in", errors) {
        Some(v) if v.is_finite() && v >= 0.0 => Some(v),
        Some(_) => {
            push(errors, "couple.burn_in", "must be finite and nonnegative");
            None
        }
        None => None,
    };
    let calibration = match opt_usize(table, "couple", "calibration", errors) {
        Some(c) if c < 2 => {
            push(errors, "couple.calibration", "must be at least 2");
            16
        }
        Some(c) => c,
        None => 16,
    };
    let past_x = req_string(table, "couple", "past_x", errors);
    let past_y = req_string(table, "couple", "past_y", errors);

    Some(CoupleSection {
        f_window: f_window?,
        f_clamp: f_clamp?,
        burn_in: burn_in?,
        calibration,
        past_x: past_x?,
        past_y: past_y?,
    })
}

fn parse_output(value: &Value, errors: &mut Vec<FieldError>) -> Option<OutputSection> {
    let table = as_table(value, "output", errors)?;
    reject_unknown(table, "output", &["directory", "formats"], errors);
    let directory =
        opt_string(table, "output", "directory", errors).unwrap_or_else(|| "out".to_string());
    let formats = match table.get("formats") {
        None => FORMATS.iter().map(|s| s.to_string()).collect(),
        Some(value) => {
            let Some(items) = value.as_array() else {
                push(
                    errors,
                    "output.formats",
                    format!("expected an array of strings, found {}", value.type_str()),
                );
                return None;
            };
            let mut out = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                match item.as_str() {
                    Some(s) if FORMATS.contains(&s) => out.push(s.to_string()),
                    Some(s) => push(
                        errors,
                        format!("output.formats[{i}]"),
                        format!("unknown format `{s}`; expected one of {}", FORMATS.join(", ")),
                    ),
                    None => push(
                        errors,
                        format!("output.formats[{i}]"),
                        format!("expected a string, found {}", item.type_str()),
                    ),
                }
            }
            if out.is_empty() {
                push(errors, "output.formats", "must contain at least one format");
            }
            out
        }
    };
    Some(OutputSection { directory, formats })
}

fn parse_past(name: &str, value: &Value, errors: &mut Vec<FieldError>) -> Option<PastDef> {
    let path = format!("pasts.{name}");
    let table = as_table(value, &path, errors)?;
    reject_unknown(table, &path, &["kind", "value", "terms"], errors);
    let kind = req_string(table, &path, "kind", errors)?;
    if !PAST_KINDS.contains(&kind.as_str()) {
        push(
            errors,
            join(&path, "kind"),
            format!("unknown kind `{kind}`; expected one of {}", PAST_KINDS.join(", ")),
        );
        return None;
    }

    let value_list = table
        .get("value")
        .and_then(|v| number_array(v, &join(&path, "value"), errors));
    let mut terms = None;
    if let Some(raw) = table.get("terms") {
        let terms_path = join(&path, "terms");
        let Some(items) = raw.as_array() else {
            push(
                errors,
                terms_path,
                format!("expected an array of tables, found {}", raw.type_str()),
            );
            return None;
        };
        let mut list = Vec::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            let term_path = format!("{terms_path}[{i}]");
            let Some(term) = as_table(item, &term_path, errors) else {
                continue;
            };
            reject_unknown(term, &term_path, &["amplitude", "rate"], errors);
            let amplitude = req_number_array(term, &term_path, "amplitude", errors);
            let rate = match req_f64(term, &term_path, "rate", errors) {
                Some(r) if r.is_finite() => Some(r),
                Some(_) => {
                    push(errors, join(&term_path, "rate"), "must be finite");
                    None
                }
                None => None,
            };
            if let (Some(a), Some(r)) = (amplitude, rate) {
                list.push(TermDef { amplitude: a, rate: r });
            }
        }
        terms = Some(list);
    }

    match kind.as_str() {
        "zero" => {
            if table.contains_key("value") {
                push(errors, join(&path, "value"), "not used by kind `zero`");
            }
            if table.contains_key("terms") {
                push(errors, join(&path, "terms"), "not used by kind `zero`");
            }
        }
        "constant" => {
            if table.contains_key("terms") {
                push(errors, join(&path, "terms"), "not used by kind `constant`");
            }
            if !table.contains_key("value") {
                push(errors, join(&path, "value"), "required by kind `constant`");
            }
        }
        "exponential_sum" => {
            if table.contains_key("value") {
                push(errors, join(&path, "value"), "not used by kind `exponential_sum`");
            }
            match &terms {
                None => push(errors, join(&path, "terms"), "required by kind `exponential_sum`"),
                Some(list) if list.is_empty() && !table.get("terms").is_none_or(|t| t.as_array().is_some_and(|a| !a.is_empty())) => {
                    push(errors, join(&path, "terms"), "must contain at least one term");
                }
                Some(_) => {}
            }
        }
        _ => unreachable!("kind was checked above"),
    }

    Some(PastDef {
        kind,
        value: value_list,
        terms,
    })
}

// ---------------------------------------------------------------------------
// cross-section validation
// ---------------------------------------------------------------------------

fn validate_cross(
    drift: &DriftSection,
    sim: &SimSection,
    girsanov: Option<&GirsanovSection>,
    couple: Option<&CoupleSection>,
    pasts: &BTreeMap<String, PastDef>,
    errors: &mut Vec<FieldError>,
) {
    let dim = drift.dimension;

    for (name, def) in pasts {
        if let Some(value) = &def.value {
            if value.len() != dim {
                push(
                    errors,
                    format!("pasts.{name}.value"),
                    format!("expected {dim} component(s), found {}", value.len()),
                );
            }
        }
        for (i, term) in def.terms.as_deref().unwrap_or_default().iter().enumerate() {
            if term.amplitude.len() != dim {
                push(
                    errors,
                    format!("pasts.{name}.terms[{i}].amplitude"),
                    format!("expected {dim} component(s), found {}", term.amplitude.len()),
                );
            }
        }
    }

    let resolvable = |name: &str, path: &str, errors: &mut Vec<FieldError>| -> bool {
        if pasts.contains_key(name) {
            true
        } else {
            push(errors, path, format!("references undefined past `{name}`"));
            false
        }
    };

    if let Some(initial) = &sim.initial {
        resolvable(initial, "sim.initial", errors);
    }

    if let Some(g) = girsanov {
        match drift.lambda {
            Some(lambda) => {
                if g.lambda_prime >= lambda {
                    push(
                        errors,
                        "girsanov.lambda_prime",
                        format!(
                            "must be strictly less than drift.lambda = {lambda} \
                             (the separation must grow slower than the kernel decays)"
                        ),
                    );
                }
            }
            None => push(
                errors,
                "girsanov",
                format!(
                    "the {} family has no memory kernel; use modulated_damping \
                     or linear_distributed_delay",
                    drift.family
                ),
            ),
        }
        let x_ok = resolvable(&g.past_x, "girsanov.past_x", errors);
        let y_ok = resolvable(&g.past_y, "girsanov.past_y", errors);
        if x_ok && y_ok {
            let ex = pasts[&g.past_x].endpoint(dim);
            let ey = pasts[&g.past_y].endpoint(dim);
            if ex != ey {
                push(
                    errors,
                    "girsanov.past_y",
                    format!(
                        "must share the value of past_x at s = 0 (the comparison \
                         path grafts a different past onto the same future); \
                         got {ex:?} vs {ey:?}"
                    ),
                );
            }
        }
    }

    if let Some(c) = couple {
        resolvable(&c.past_x, "couple.past_x", errors);
        resolvable(&c.past_y, "couple.past_y", errors);
        if c.burn_in + c.f_window >= sim.horizon {
            push(
                errors,
                "couple.burn_in",
                "burn_in + f_window must be smaller than sim.T",
            );
        }
    }
}

/// Parses and fully validates a TOML experiment description.
///
/// # Errors
/// Returns every field-level problem found, each with its dotted path; a
/// syntax error is reported under the path `<syntax>` with the parser's
/// line/column message.
pub fn parse_config(text: &str) -> Result<RunConfig, Vec<FieldError>> {
    let value: Value = toml::from_str(text).map_err(|e| {
        vec![FieldError {
            path: "<syntax>".to_string(),
            message: e.to_string(),
        }]
    })?;
    let root = value
        .as_table()
        .expect("a parsed TOML document is always a table");

    let mut errors = Vec::new();
    reject_unknown(
        root,
        "",
        &["drift", "sim", "checks", "girsanov", "couple", "output", "pasts"],
        &mut errors,
    );

    let section = |key: &str, errors: &mut Vec<FieldError>| -> Option<Value> {
        root.get(key).cloned().or_else(|| {
            push(errors, key, "missing required section");
            None
        })
    };
    let drift = section("drift", &mut errors).and_then(|v| parse_drift(&v, &mut errors));
    let sim = section("sim", &mut errors).and_then(|v| parse_sim(&v, &mut errors));
    let checks = root.get("checks").and_then(|v| parse_checks(v, &mut errors));
    let girsanov = root
        .get("girsanov")
        .and_then(|v| parse_girsanov(v, &mut errors));
    let couple = root.get("couple").and_then(|v| parse_couple(v, &mut errors));
    let output = match root.get("output") {
        Some(v) => parse_output(v, &mut errors),
        None => Some(OutputSection {
            directory: "out".to_string(),
            formats: FORMATS.iter().map(|s| s.to_string()).collect(),
        }),
    };

    let mut pasts = BTreeMap::new();
    if let Some(raw) = root.get("pasts") {
        if let Some(table) = as_table(raw, "pasts", &mut errors) {
            for (name, value) in table {
                if let Some(def) = parse_past(name, value, &mut errors) {
                    pasts.insert(name.clone(), def);
                }
            }
        }
    }

    if let (Some(drift), Some(sim)) = (&drift, &sim) {
        validate_cross(
            drift,
            sim,
            girsanov.as_ref(),
            couple.as_ref(),
            &pasts,
            &mut errors,
        );
    }

    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(RunConfig {
        drift: drift.expect("no errors implies drift parsed"),
        sim: sim.expect("no errors implies sim parsed"),
        checks,
        girsanov,
        couple,
        output: output.expect("no errors implies output parsed"),
        pasts,
    }
    .normalize())
}

impl RunConfig {
    /// Materialises the output section default when the struct was built by
    /// hand with an empty formats list.
    fn normalize(mut self) -> Self {
        if self.output.formats.is_empty() {
            self.output.formats = FORMATS.iter().map(|s| s.to_string()).collect();
        }
        self
    }
}
