//! Batch front end: load a config, run one operation, emit a JSON report.

pub mod commands;
pub mod config;
pub mod error;
pub mod family;
pub mod report;

use std::path::Path;
use std::time::Instant;

use serde_json::{json, Value};

pub use commands::Command;
pub use config::Config;
pub use error::{CliError, Result};

/// Command-line values that take precedence over `[run]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub depth: Option<u32>,
    pub horizon: Option<u32>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Report {
    /// Everything except the runtime; byte-identical across repeated runs.
    pub body: Value,
    pub runtime_ms: u128,
}

impl Report {
    pub fn finding(&self) -> bool {
        self.body["finding"].as_bool().unwrap_or(false)
    }

    pub fn exit_code(&self) -> i32 {
        if self.finding() {
            2
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        let mut v = self.body.clone();
        v["runtime_ms"] = json!(self.runtime_ms);
        serde_json::to_string_pretty(&v).expect("reports serialize")
    }
}

pub fn load_config(path: &Path) -> Result<Config> {
    Config::parse(&std::fs::read_to_string(path)?)
}

fn input_digests(families: &std::collections::BTreeMap<String, family::Family>) -> Value {
    families
        .values()
        .map(|f| {
            json!({
                "family": f.name,
                "kind": serde_json::to_value(f.kind).expect("provenance serializes"),
                "horizon": f.horizon,
                "members": f.members.len(),
                "digest": f.digest(),
            })
        })
        .collect::<Vec<_>>()
        .into()
}

pub fn execute(cmd: Command, config: &Config, overrides: Overrides) -> Result<Report> {
    let start = Instant::now();
    let mut run = config.run.clone();
    if let Some(d) = overrides.depth {
        run.insert("depth".into(), toml::Value::Integer(d.into()));
    }
    if let Some(h) = overrides.horizon {
        run.insert("horizon".into(), toml::Value::Integer(h.into()));
    }
    if let Some(s) = overrides.seed {
        let s = i64::try_from(s).map_err(|_| CliError::Config(format!("seed {s} does not fit a TOML integer")))?;
        run.insert("seed".into(), toml::Value::Integer(s));
    }
    let families = family::materialize(config, overrides.horizon)?;
    let outcome = commands::dispatch(cmd, &run, &families)?;
    let body = json!({
        "version": report::SCHEMA_VERSION,
        "command": cmd.name(),
        "run": serde_json::to_value(&run).map_err(|e| CliError::Config(e.to_string()))?,
        "inputs": input_digests(&families),
        "finding": outcome.finding,
        "result": outcome.result,
    });
    Ok(Report { body, runtime_ms: start.elapsed().as_millis() })
}

/// Recomputes every family digest from `config` and compares it with the
/// `inputs` recorded in `report`.
pub fn inputs_match(report: &Value, config: &Config, horizon: Option<u32>) -> Result<bool> {
    let families = family::materialize(config, horizon)?;
    Ok(report["inputs"] == input_digests(&families))
}
