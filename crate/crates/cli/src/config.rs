//! Layered training configuration: built-in defaults, then an optional TOML
//! file, then command-line flags. The merged result is a JSON object that is
//! echoed into every artifact a command writes.
//!
//! File layout (every key optional):
//!
//! ```toml
//! method = "fisherboost"
//! cascade = true
//! exit_schedule = [10, 20, 40, 70, 100]
//! negatives_per_exit = 1000
//! min_weak_for_lac = 30
//! k_asym = 4.0
//! shrinkage = 1e-3
//!
//! [goals]
//! d_target = 0.997
//! f_target = 0.5
//!
//! [boost]
//! theta = 0.1
//! epsilon = 1e-5
//! n_max = 200
//! q_exact = false
//! seed = 0
//! ```

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::{json, Map, Value};

use lacboost::cascade::{CascadeConfig, CascadeMethod};

/// A fully resolved training configuration.
#[derive(Clone, Debug)]
pub struct TrainSettings {
    pub method: CascadeMethod,
    pub cascade: bool,
    pub config: CascadeConfig,
    /// The merged configuration as echoed into artifacts.
    pub echo: Value,
}

pub fn defaults() -> Result<Value> {
    let mut v = serde_json::to_value(CascadeConfig::default())?;
    let obj = v.as_object_mut().expect("config serialises to an object");
    obj.insert("method".into(), json!(CascadeMethod::FisherBoost));
    obj.insert("cascade".into(), json!(false));
    Ok(v)
}

/// Overlay `top` onto `base`, recursing into tables. Keys absent from `base`
/// are rejected so that typos in a config file do not pass silently.
pub fn merge(base: &mut Value, top: Value, path: &str) -> Result<()> {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                let key_path = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v, &key_path)?,
                    None => {
                        let known: Vec<&str> = b.keys().map(String::as_str).collect();
                        bail!(
                            "unknown configuration key {key_path:?} (expected one of: {})",
                            known.join(", ")
                        );
                    }
                }
            }
            Ok(())
        }
        (slot, v) => {
            *slot = v;
            Ok(())
        }
    }
}

pub fn load_file(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    let table: toml::Table =
        toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))?;
    Ok(serde_json::to_value(table)?)
}

/// Resolve defaults < file < `flags` (a partial object built from the
/// command line).
pub fn resolve(file: Option<&Path>, flags: Map<String, Value>) -> Result<TrainSettings> {
    let mut merged = defaults()?;
    if let Some(path) = file {
        merge(&mut merged, load_file(path)?, "")
            .with_context(|| format!("in config file {}", path.display()))?;
    }
    merge(&mut merged, Value::Object(flags), "")?;

    let mut rest = merged.clone();
    let obj = rest.as_object_mut().expect("merged config is an object");
    let method_value = obj.remove("method").unwrap_or(Value::Null);
    let method: CascadeMethod = match &method_value {
        Value::String(s) => s.parse()?,
        other => bail!("method must be a string, got {other}"),
    };
    let cascade = match obj.remove("cascade") {
        Some(Value::Bool(b)) => b,
        Some(other) => bail!("cascade must be true or false, got {other}"),
        None => false,
    };
    let config: CascadeConfig = serde_json::from_value(rest).context("invalid configuration")?;
    config.validate()?;
    Ok(TrainSettings {
        method,
        cascade,
        config,
        echo: merged,
    })
}

/// Set `obj[path...] = value`, creating intermediate tables.
pub fn set(obj: &mut Map<String, Value>, path: &[&str], value: Value) {
    match path {
        [] => {}
        [last] => {
            obj.insert((*last).to_string(), value);
        }
        [head, tail @ ..] => {
            let child = obj
                .entry((*head).to_string())
                .or_insert_with(|| Value::Object(Map::new()));
            if let Value::Object(m) = child {
                set(m, tail, value);
            }
        }
    }
}
