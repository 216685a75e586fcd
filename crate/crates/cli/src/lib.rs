//! Batch front end: each command reads a JSON config, runs one study and
//! writes CSV/JSON artifacts plus a `manifest.json` into its output directory.

pub mod commands;
pub mod config;
pub mod output;

use std::env;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

pub use config::{CliError, CommandName, RunConfig, OUTPUT_ENV};
use output::{sha256_hex, write_manifest, Manifest, Output, VERSIONS};

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: PathBuf,
    pub summary: Value,
}

/// Runs `command` with a raw config value (file contents plus overrides).
pub fn run(command: CommandName, value: Value) -> Result<RunOutcome, CliError> {
    match commands::dispatch(command, value, false)? {
        Dispatched::Ran(o) => Ok(o),
        Dispatched::Config(_) => unreachable!("run mode"),
    }
}

/// The config with every default filled in, without running anything.
pub fn resolved_config(command: CommandName, value: Value) -> Result<Value, CliError> {
    match commands::dispatch(command, value, true)? {
        Dispatched::Config(v) => Ok(v),
        Dispatched::Ran(_) => unreachable!("print mode"),
    }
}

pub enum Dispatched {
    Ran(RunOutcome),
    Config(Value),
}

pub fn output_dir(command: CommandName, configured: Option<&Path>) -> PathBuf {
    let rel = configured.map(Path::to_path_buf).unwrap_or_else(|| Path::new("runs").join(command.as_str()));
    if rel.is_absolute() {
        return rel;
    }
    match env::var_os(OUTPUT_ENV) {
        Some(root) => PathBuf::from(root).join(rel),
        None => rel,
    }
}

fn resolved<P: Serialize, G: Serialize, T: Serialize>(
    command: CommandName,
    cfg: &RunConfig<P, G, T>,
) -> Result<Value, CliError> {
    let mut v = serde_json::to_value(cfg).map_err(config::config_error)?;
    v["command"] = Value::String(command.as_str().into());
    v["model"] = serde_json::to_value(command.model()).map_err(config::config_error)?;
    Ok(v)
}

pub(crate) fn execute<P, G, T, F>(command: CommandName, value: Value, print: bool, body: F) -> Result<Dispatched, CliError>
where
    P: Serialize + DeserializeOwned + Default,
    G: Serialize + DeserializeOwned + Default,
    T: Serialize + DeserializeOwned + Default,
    F: FnOnce(&RunConfig<P, G, T>, &mut Output) -> Result<Value, CliError> + Send,
    RunConfig<P, G, T>: Sync,
{
    let cfg = RunConfig::<P, G, T>::parse(command, value)?;
    let config = resolved(command, &cfg)?;
    if print {
        return Ok(Dispatched::Config(config));
    }
    let config_sha256 = sha256_hex(config.to_string().as_bytes());
    let dir = output_dir(command, cfg.output_dir.as_deref());
    let mut out = Output::new(dir.clone())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let workers = pool.current_num_threads();
    let t0 = Instant::now();
    let result = pool.install(|| body(&cfg, &mut out));
    if let Ok(summary) = &result {
        out.json("summary.json", summary)?;
    }
    let manifest = Manifest {
        command: command.as_str(),
        status: if result.is_ok() { "ok" } else { "failed" },
        exit_code: result.as_ref().map_or_else(CliError::exit_code, |_| 0),
        error: result.as_ref().err().map(ToString::to_string),
        config,
        config_sha256,
        versions: VERSIONS,
        workers,
        timings: out.timings.clone(),
        total_seconds: t0.elapsed().as_secs_f64(),
        artifacts: out.artifacts.clone(),
    };
    let manifest = write_manifest(&dir, &manifest)?;
    let summary = result?;
    Ok(Dispatched::Ran(RunOutcome { dir, manifest, summary }))
}
