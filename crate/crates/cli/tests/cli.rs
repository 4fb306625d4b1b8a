//! End-to-end tests of the `memsde` binary: exit codes, override handling,
//! artifact determinism and manifest completeness.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use memsde::manifest::sha256_hex;

const OU_CONFIG: &str = "\
[drift]
family = \"ou\"
b = 1.0

[sim]
T = 2.0
dt = 0.01
n = 50
seed = 42
window = 2.0

[checks]
z = [0.5, 1.0]
delta_t = [0.05, 0.1]
delta = 0.1
delta0 = 0.05
k_window = 4.0
";

const MD_GIRSANOV_CONFIG: &str = "\
[drift]
family = \"modulated_damping\"
b = 1.0
epsilon = 0.5
lambda = 1.0

[sim]
T = 2.0
dt = 0.01
n = 20
seed = 5
window = 4.0

[girsanov]
lambda_prime = 0.5
k_prime = 0.1
horizon = 1.0
replicas = 40
past_x = \"flat\"
past_y = \"bump\"

[pasts.flat]
kind = \"zero\"

[pasts.bump]
kind = \"exponential_sum\"
terms = [
  { amplitude = [0.1], rate = 0.5 },
  { amplitude = [-0.1], rate = 0.0 },
]
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_memsde"))
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).expect("config written");
    path.display().to_string()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

#[test]
fn missing_config_flag_is_a_runtime_error() {
    let output = run(&["simulate"]);
    assert_eq!(exit_code(&output), 1, "stderr: {}", stderr_of(&output));
    assert!(
        stderr_of(&output).contains("--config"),
        "the error names the missing flag: {}",
        stderr_of(&output)
    );
}

#[test]
fn config_errors_are_reported_with_field_paths_and_exit_one() {
    let dir = tempfile::tempdir().expect("temp dir");
    let broken = MD_GIRSANOV_CONFIG
        .replace("b = 1.0\n", "b = 1.0\ngamma = 2.0\n")
        .replace("lambda_prime = 0.5", "lambda_prime = 1.0");
    let config = write_config(dir.path(), &broken);
    let output = run(&["check-conditions", "--config", &config]);
    assert_eq!(exit_code(&output), 1);
    let stderr = stderr_of(&output);
    assert!(
        stderr.contains("drift.gamma"),
        "unknown key reported with its path: {stderr}"
    );
    assert!(
        stderr.contains("girsanov.lambda_prime"),
        "rate violation reported with its path: {stderr}"
    );
}

#[test]
fn simulate_twice_with_the_same_config_is_byte_identical() {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = write_config(dir.path(), OU_CONFIG);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let output = run(&["simulate", "--config", &config, "--out", &out.display().to_string()]);
        assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_of(&output));
    }
    for name in ["trajectory.csv", "trajectory.json", "manifest.json"] {
        let a = fs::read(out_a.join(name)).expect("first run artifact");
        let b = fs::read(out_b.join(name)).expect("second run artifact");
        assert_eq!(a, b, "{name} must be byte-identical across reruns");
    }
}

#[test]
fn thread_count_does_not_change_any_artifact() {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = write_config(dir.path(), OU_CONFIG);
    let out_one = dir.path().join("one");
    let out_four = dir.path().join("four");
    for (out, threads) in [(&out_one, "1"), (&out_four, "4")] {
        let output = run(&[
            "stationary",
            "--config",
            &config,
            "--out",
            &out.display().to_string(),
            "--threads",
            threads,
        ]);
        assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_of(&output));
    }
    let names: Vec<String> = fs::read_dir(&out_one)
        .expect("output dir")
        .map(|e| e.expect("entry").file_name().into_string().expect("utf8"))
        .collect();
    assert!(!names.is_empty());
    for name in names {
        let a = fs::read(out_one.join(&name)).expect("one-thread artifact");
        let b = fs::read(out_four.join(&name)).expect("four-thread artifact");
        assert_eq!(a, b, "{name} must not depend on the thread count");
    }
}

#[test]
fn overrides_take_precedence_and_are_recorded_in_the_manifest() {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = write_config(dir.path(), OU_CONFIG);
    let out = dir.path().join("out");
    let output = run(&[
        "simulate",
        "--config",
        &config,
        "--out",
        &out.display().to_string(),
        "--seed",
        "99",
        "--T",
        "1.0",
        "--dt",
        "0.02",
    ]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_of(&output));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).expect("manifest"))
            .expect("manifest is JSON");
    assert_eq!(manifest["seed"], 99, "effective seed is the override");
    assert_eq!(manifest["overrides"]["seed"], "99");
    assert_eq!(manifest["overrides"]["T"], "1");
    assert_eq!(manifest["overrides"]["dt"], "0.02");

    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("trajectory.json")).expect("sidecar"))
            .expect("sidecar is JSON");
    assert_eq!(sidecar["seed"], 99, "the trajectory used the seed override");
    assert_eq!(sidecar["dt"], 0.02, "the trajectory used the dt override");
}

#[test]
fn check_bounds_on_ou_passes_with_exit_zero() {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = write_config(dir.path(), OU_CONFIG);
    let out = dir.path().join("out");
    let output = run(&["check-bounds", "--config", &config, "--out", &out.display().to_string()]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_of(&output));
    let bounds = fs::read_to_string(out.join("bounds.json")).expect("bounds.json");
    assert!(bounds.contains("\"pass\""), "at least one pass verdict: {bounds}");
    assert!(!bounds.contains("\"fail\""), "no fail verdicts: {bounds}");
}

#[test]
fn check_conditions_on_delay_drift_emits_a_witness_and_exits_two() {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = write_config(
        dir.path(),
        "\
[drift]
family = \"linear_distributed_delay\"
b = 1.0
kappa = 0.3
lambda = 1.0

[sim]
T = 2.0
dt = 0.01
n = 10
seed = 7
window = 2.0
",
    );
    let out = dir.path().join("out");
    let output = run(&[
        "check-conditions",
        "--config",
        &config,
        "--out",
        &out.display().to_string(),
    ]);
    assert_eq!(
        exit_code(&output),
        2,
        "a failed theory check is exit 2, not a crash: {}",
        stderr_of(&output)
    );
    let conditions: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("conditions.json")).expect("report"))
            .expect("report is JSON");
    assert_eq!(conditions["dissipativity"]["violated"], true);
    assert!(
        conditions["dissipativity"]["witness"].is_object(),
        "the divergence witness is emitted inline: {conditions}"
    );
}

#[test]
fn manifest_lists_every_artifact_with_its_content_hash() {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = write_config(dir.path(), MD_GIRSANOV_CONFIG);
    let out = dir.path().join("out");
    let output = run(&["girsanov", "--config", &config, "--out", &out.display().to_string()]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_of(&output));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).expect("manifest"))
            .expect("manifest is JSON");
    let listed: BTreeMap<String, String> = manifest["files"]
        .as_object()
        .expect("files map")
        .iter()
        .map(|(k, v)| (k.clone(), v.as_str().expect("hash string").to_string()))
        .collect();

    let mut on_disk = Vec::new();
    for entry in fs::read_dir(&out).expect("output dir") {
        let name = entry
            .expect("entry")
            .file_name()
            .into_string()
            .expect("utf8 name");
        if name != "manifest.json" {
            on_disk.push(name);
        }
    }
    on_disk.sort();
    assert_eq!(
        on_disk,
        listed.keys().cloned().collect::<Vec<_>>(),
        "every artifact in the directory is listed, nothing else"
    );
    for (name, recorded) in &listed {
        let bytes = fs::read(out.join(name)).expect("artifact readable");
        assert_eq!(
            &sha256_hex(&bytes),
            recorded,
            "{name}: the manifest hash matches the file content"
        );
    }
    assert_eq!(manifest["config_sha256"], sha256_hex(MD_GIRSANOV_CONFIG.as_bytes()));
}

#[test]
fn output_formats_filter_which_artifacts_are_written() {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = write_config(
        dir.path(),
        &format!("{OU_CONFIG}\n[output]\nformats = [\"json\"]\n"),
    );
    let out = dir.path().join("out");
    let output = run(&["simulate", "--config", &config, "--out", &out.display().to_string()]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_of(&output));
    assert!(out.join("trajectory.json").exists());
    assert!(
        !out.join("trajectory.csv").exists(),
        "csv artifacts are skipped when only json is configured"
    );
}
