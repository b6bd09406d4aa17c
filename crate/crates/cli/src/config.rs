//! Config files for `phasedpc sweep`.
//!
//! A config is a flat TOML table. `command` names the subcommand; every
//! other key is a flag name without the leading dashes:
//!
//! ```toml
//! command = "bound"
//! q-db = 2
//! p-db = "0:0.5:20"
//! out = "bounds_q2db.csv"
//! ```
//!
//! Numbers and strings become flag values, arrays become comma lists and
//! `true` becomes a bare switch. Keys are emitted in sorted order.

use serde::Deserialize;
use toml::{Table, Value};

pub const COMMANDS: [&str; 5] = ["bound", "outage", "sector", "feedback", "simulate"];

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SweepConfig {
    pub command: String,
    #[serde(flatten)]
    pub params: Table,
}

fn scalar(key: &str, v: &Value) -> Result<String, String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Integer(i) => Ok(i.to_string()),
        Value::Float(x) if x.is_finite() => Ok(x.to_string()),
        _ => Err(format!("`{key}` must be a number, a string or a list of them")),
    }
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        if !COMMANDS.contains(&cfg.command.as_str()) {
            return Err(format!(
                "unknown command `{}`; expected one of {}",
                cfg.command,
                COMMANDS.join(", ")
            ));
        }
        Ok(cfg)
    }

    /// Arguments following the program name.
    pub fn to_argv(&self) -> Result<Vec<String>, String> {
        let mut argv = vec![self.command.clone()];
        for (key, v) in &self.params {
            let flag = format!("--{key}");
            match v {
                Value::Boolean(true) => argv.push(flag),
                Value::Boolean(false) => {}
                Value::Array(items) => {
                    let parts = items.iter().map(|x| scalar(key, x)).collect::<Result<Vec<_>, _>>()?;
                    argv.push(flag);
                    argv.push(parts.join(","));
                }
                other => {
                    argv.push(flag);
                    argv.push(scalar(key, other)?);
                }
            }
        }
        Ok(argv)
    }
}
