use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

/// Output directories given as relative paths are placed under this root.
pub const OUTPUT_ENV: &str = "SHOCKTUBE_OUTPUT_ROOT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 2,
            CliError::Config(_) | CliError::Io(_) => 1,
        }
    }
}

pub fn config_error(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

pub fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    FeasibleScan,
    Profile,
    SolveData,
    EvansContour,
    D0Scan,
    StabilityIndex,
    LocalShock,
    LocalNonuniqueness,
    LocalHopf,
    LinearSteady,
    StandingShock,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandName::FeasibleScan => "feasible-scan",
            CommandName::Profile => "profile",
            CommandName::SolveData => "solve-data",
            CommandName::EvansContour => "evans-contour",
            CommandName::D0Scan => "d0-scan",
            CommandName::StabilityIndex => "stability-index",
            CommandName::LocalShock => "local-shock",
            CommandName::LocalNonuniqueness => "local-nonuniqueness",
            CommandName::LocalHopf => "local-hopf",
            CommandName::LinearSteady => "linear-steady",
            CommandName::StandingShock => "standing-shock",
        }
    }

    /// Model a command works on; `None` for the constant-coefficient solver.
    pub fn model(self) -> Option<Model> {
        use CommandName::*;
        match self {
            FeasibleScan | Profile | SolveData | EvansContour | D0Scan | StabilityIndex => Some(Model::Polytropic),
            LocalShock | LocalNonuniqueness | LocalHopf | StandingShock => Some(Model::Local),
            LinearSteady => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Polytropic,
    Local,
}

/// The envelope shared by every command; the three blocks are command specific.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[serde(bound(
    serialize = "P: Serialize, G: Serialize, T: Serialize",
    deserialize = "P: DeserializeOwned + Default, G: DeserializeOwned + Default, T: DeserializeOwned + Default"
))]
pub struct RunConfig<P, G, T> {
    pub command: Option<CommandName>,
    pub model: Option<Model>,
    pub params: P,
    pub grid: G,
    pub tolerances: T,
    /// Relative paths resolve against `$SHOCKTUBE_OUTPUT_ROOT` (or the
    /// working directory); defaults to `runs/<command>`.
    pub output_dir: Option<PathBuf>,
    /// Worker threads; `None` lets the pool pick. Results do not depend on it.
    pub workers: Option<usize>,
}

impl<P, G, T> RunConfig<P, G, T>
where
    P: DeserializeOwned + Default,
    G: DeserializeOwned + Default,
    T: DeserializeOwned + Default,
{
    pub fn parse(command: CommandName, value: Value) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_value(value).map_err(|e| CliError::Config(format!("schema: {e}")))?;
        if let Some(c) = cfg.command {
            if c != command {
                return Err(CliError::Config(format!(
                    "config is for `{}`, not `{}`",
                    c.as_str(),
                    command.as_str()
                )));
            }
        }
        if cfg.model.is_some() && cfg.model != command.model() {
            return Err(CliError::Config(format!("`{}` does not run on model {:?}", command.as_str(), cfg.model)));
        }
        if cfg.workers == Some(0) {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        Ok(cfg)
    }
}

/// Reads the config file (or starts from `{}`) and applies `key=value` overrides.
pub fn load(path: Option<&Path>, sets: &[String]) -> Result<Value, CliError> {
    let mut v = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Map::new()),
    };
    for s in sets {
        apply_set(&mut v, s)?;
    }
    Ok(v)
}

/// `a.b.c=value`; the value is parsed as JSON, falling back to a plain string.
/// Numeric segments index into existing arrays.
pub fn apply_set(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) =
        assignment.split_once('=').ok_or_else(|| CliError::Config(format!("`{assignment}` is not key=value")))?;
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::Config(format!("bad key `{key}`")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    for seg in key.split('.') {
        node = match node {
            Value::Array(items) => {
                let i: usize = seg.parse().map_err(|_| CliError::Config(format!("`{seg}` is not an index")))?;
                items.get_mut(i).ok_or_else(|| CliError::Config(format!("index {i} out of range in `{key}`")))?
            }
            Value::Object(map) => map.entry(seg).or_insert_with(|| Value::Object(Map::new())),
            other => {
                if !other.is_null() {
                    return Err(CliError::Config(format!("`{key}` descends into a scalar")));
                }
                *other = Value::Object(Map::new());
                other.as_object_mut().expect("just set").entry(seg).or_insert_with(|| Value::Object(Map::new()))
            }
        };
    }
    *node = value;
    Ok(())
}
