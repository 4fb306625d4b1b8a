//! `memsde`: deterministic experiments on SDEs with exponentially fading
//! memory, driven by one TOML config per run.

use std::collections::BTreeMap;
use std::env;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context};
use clap::{Parser, Subcommand};

use memsde::commands;
use memsde::config::{parse_config, RunConfig};
use memsde::manifest::{sha256_hex, ArtifactWriter};

#[derive(Parser)]
#[command(
    name = "memsde",
    version,
    about = "Simulation and verification laboratory for SDEs whose drift reads \
             the entire past through exponentially weighted integrals"
)]
struct Cli {
    /// TOML run configuration (required).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.directory`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed override; recorded in the manifest.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads; falls back to MEMSDE_THREADS, then all cores.
    /// Artifacts are byte-identical at any thread count.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Horizon override for `sim.T`; recorded in the manifest.
    #[arg(long = "T", global = true, value_name = "SECONDS")]
    horizon: Option<f64>,
    /// Step override for `sim.dt`; recorded in the manifest.
    #[arg(long, global = true, value_name = "SECONDS")]
    dt: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Integrate one trajectory from the configured past.
    Simulate,
    /// Build a stationary sample cloud by time averaging.
    Stationary,
    /// Estimate drift conditions and audit the declared constants.
    CheckConditions,
    /// Check the stationary moment cap and increment tail bounds.
    CheckBounds,
    /// Run the change-of-measure experiment between two pasts.
    Girsanov,
    /// Couple two pasts on shared noise and calibrate the ergodic gap.
    Couple,
    /// Windowed pathwise growth diagnostic.
    DiagnoseGrowth,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Stationary => "stationary",
            Command::CheckConditions => "check-conditions",
            Command::CheckBounds => "check-bounds",
            Command::Girsanov => "girsanov",
            Command::Couple => "couple",
            Command::DiagnoseGrowth => "diagnose-growth",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Loads the config, applies overrides, initialises the thread pool and
/// dispatches; `Ok(false)` means the run completed but a check failed.
fn run(cli: Cli) -> anyhow::Result<bool> {
    let config_path = cli
        .config
        .as_ref()
        .context("--config PATH is required")?;
    let text = fs::read_to_string(config_path)
        .with_context(|| format!("reading {}", config_path.display()))?;
    let mut config = match parse_config(&text) {
        Ok(config) => config,
        Err(errors) => {
            for error in &errors {
                eprintln!("config error: {error}");
            }
            bail!(
                "{} configuration error(s) in {}",
                errors.len(),
                config_path.display()
            );
        }
    };
    let overrides = apply_overrides(&cli, &mut config)?;

    // The thread count never reaches the manifest: artifacts must be
    // byte-identical at any parallelism.
    let threads = cli.threads.or_else(|| {
        env::var("MEMSDE_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        ensure!(n > 0, "--threads must be at least 1");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("initialising the worker pool")?;
    }

    let mut writer = ArtifactWriter::new(
        Path::new(&config.output.directory),
        &config.output.formats,
    )?;
    let passed = match cli.command {
        Command::Simulate => commands::simulate_cmd(&config, &mut writer)?,
        Command::Stationary => commands::stationary_cmd(&config, &mut writer)?,
        Command::CheckConditions => commands::check_conditions_cmd(&config, &mut writer)?,
        Command::CheckBounds => commands::check_bounds_cmd(&config, &mut writer)?,
        Command::Girsanov => commands::girsanov_cmd(&config, &mut writer)?,
        Command::Couple => commands::couple_cmd(&config, &mut writer)?,
        Command::DiagnoseGrowth => commands::diagnose_growth_cmd(&config, &mut writer)?,
    };

    let name = cli.command.name();
    let files = writer.files().len();
    writer.finish(name, sha256_hex(text.as_bytes()), config.sim.seed, overrides)?;
    println!(
        "{name}: {} ({files} artifact(s) + manifest in {})",
        if passed { "ok" } else { "FAIL" },
        config.output.directory,
    );
    Ok(passed)
}

/// Applies `--seed`, `--T`, `--dt` and `--out` on top of the config and
/// returns the manifest record of what changed.
fn apply_overrides(cli: &Cli, config: &mut RunConfig) -> anyhow::Result<BTreeMap<String, String>> {
    let mut overrides = BTreeMap::new();
    if let Some(seed) = cli.seed {
        config.sim.seed = seed;
        overrides.insert("seed".to_string(), seed.to_string());
    }
    if let Some(horizon) = cli.horizon {
        ensure!(
            horizon.is_finite() && horizon > 0.0,
            "--T must be finite and positive"
        );
        config.sim.horizon = horizon;
        overrides.insert("T".to_string(), format!("{horizon}"));
    }
    if let Some(dt) = cli.dt {
        ensure!(dt.is_finite() && dt > 0.0, "--dt must be finite and positive");
        config.sim.dt = dt;
        overrides.insert("dt".to_string(), format!("{dt}"));
    }
    ensure!(
        config.sim.dt <= config.sim.horizon,
        "sim.dt = {} must not exceed sim.T = {}",
        config.sim.dt,
        config.sim.horizon
    );
    if let Some(out) = &cli.out {
        config.output.directory = out.display().to_string();
    }
    Ok(overrides)
}
