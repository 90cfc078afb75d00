//! Scenario files: a TOML document naming the engine, run settings and the
//! engine's own section.
//!
//! ```toml
//! name = "both-smallgap"
//! engine = "clonal"
//!
//! [run]
//! seed = 7
//! replicates = 20
//!
//! [clonal.theory]
//! emergent = true
//! residual = true
//! ```
//!
//! Missing keys take their defaults. Overrides use the same dotted paths,
//! e.g. `clonal.theory.death_rate=40` or `clonal.injections.1.at=420`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::clonal::ClonalConfig;
use crate::error::{ConfigError, Error, Result};
use crate::spatial::SpatialConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Clonal,
    Spatial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    pub seed: u64,
    pub replicates: usize,
    /// Worker threads for replicates; 0 uses every hardware thread.
    pub workers: usize,
    pub plots: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            seed: 1,
            replicates: 20,
            workers: 0,
            plots: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub engine: Engine,
    #[serde(default)]
    pub run: RunSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clonal: Option<ClonalConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spatial: Option<SpatialConfig>,
}

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../scenarios/", $name, ".toml")))),*]
    };
}

const BUNDLED: &[(&str, &str)] = bundled![
    "none-smallgap",
    "none-biggap",
    "emergent-smallgap",
    "emergent-biggap",
    "residual-smallgap",
    "residual-biggap",
    "both-smallgap",
    "both-biggap",
    "network-smallgap",
    "network-biggap",
    "all-smallgap",
    "all-biggap",
    "polyclonal",
];

/// Names of the scenarios compiled into the library, in listing order.
pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

/// Every bundled scenario, parsed.
pub fn bundled() -> Vec<Scenario> {
    BUNDLED
        .iter()
        .map(|(_, text)| Scenario::from_toml(text).expect("bundled scenarios are valid"))
        .collect()
}

pub fn bundled_text(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Loads a bundled scenario by name, or a scenario file by path, and
/// applies `key=value` overrides in order.
pub fn resolve(name_or_path: &str, overrides: &[(String, String)]) -> Result<Scenario> {
    let text = match bundled_text(name_or_path) {
        Some(t) => t.to_owned(),
        None => {
            let path = Path::new(name_or_path);
            if !path.is_file() {
                return Err(Error::UnknownScenario(name_or_path.to_owned()));
            }
            std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?
        }
    };
    Scenario::from_toml_with_overrides(&text, overrides)
}

/// Splits `key=value`.
pub fn parse_override(arg: &str) -> Result<(String, String), ConfigError> {
    match arg.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_owned(), v.trim().to_owned())),
        _ => Err(ConfigError::invalid(
            arg,
            "overrides take the form key=value",
        )),
    }
}

/// A TOML literal when the text parses as one, otherwise a bare string.
fn override_value(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_owned()))
}

fn set_path(root: &mut Table, key: &str, value: Value) -> Result<(), ConfigError> {
    let parts: Vec<&str> = key.split('.').collect();
    let unknown = || ConfigError::invalid(key, "no such key");
    let (last, parents) = parts.split_last().ok_or_else(unknown)?;
    let mut cur: &mut Value = root
        .entry(parts[0].to_owned())
        .or_insert_with(|| Value::Table(Table::new()));
    if parents.is_empty() {
        *cur = value;
        return Ok(());
    }
    for part in &parents[1..] {
        cur = step_into(cur, part).ok_or_else(unknown)?;
    }
    match cur {
        Value::Table(t) => {
            t.insert((*last).to_owned(), value);
        }
        Value::Array(a) => {
            let slot = last
                .parse::<usize>()
                .ok()
                .and_then(|i| a.get_mut(i))
                .ok_or_else(unknown)?;
            *slot = value;
        }
        _ => return Err(unknown()),
    }
    Ok(())
}

fn step_into<'a>(v: &'a mut Value, part: &str) -> Option<&'a mut Value> {
    match v {
        Value::Table(t) => Some(
            t.entry(part.to_owned())
                .or_insert_with(|| Value::Table(Table::new())),
        ),
        Value::Array(a) => part.parse::<usize>().ok().and_then(|i| a.get_mut(i)),
        _ => None,
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    pub fn from_toml_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let base: Scenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if overrides.is_empty() {
            return base.normalized();
        }
        // Overrides apply to the fully spelled-out document so paths into
        // defaulted sections and arrays resolve.
        let mut table =
            Table::try_from(base.normalized()?).map_err(|e| Error::Parse(e.to_string()))?;
        for (key, raw) in overrides {
            set_path(&mut table, key, override_value(raw))?;
            Scenario::deserialize(table.clone())
                .map_err(|e| ConfigError::invalid(key.clone(), e.message().trim().to_owned()))?;
        }
        let scenario = Scenario::deserialize(table).map_err(|e| Error::Parse(e.to_string()))?;
        scenario.normalized()
    }

    /// Fills in the engine's section and validates everything.
    fn normalized(mut self) -> Result<Self> {
        match self.engine {
            Engine::Clonal => {
                if self.spatial.is_some() {
                    return Err(
                        ConfigError::invalid("spatial", "not used by a clonal scenario").into(),
                    );
                }
                self.clonal.get_or_insert_with(ClonalConfig::default);
            }
            Engine::Spatial => {
                if self.clonal.is_some() {
                    return Err(
                        ConfigError::invalid("clonal", "not used by a spatial scenario").into(),
                    );
                }
                self.spatial.get_or_insert_with(SpatialConfig::default);
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.trim().is_empty() {
            return Err(ConfigError::invalid("name", "must not be empty"));
        }
        if self.run.replicates == 0 {
            return Err(ConfigError::invalid("run.replicates", "must be >= 1"));
        }
        if i64::try_from(self.run.seed).is_err() {
            return Err(ConfigError::invalid(
                "run.seed",
                "must fit in a signed 64-bit integer",
            ));
        }
        if let Some(c) = &self.clonal {
            c.validate().map_err(|e| e.within("clonal"))?;
        }
        if let Some(s) = &self.spatial {
            s.validate().map_err(|e| e.within("spatial"))?;
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    /// Number of scheduled injections in the engine's section.
    pub fn injection_count(&self) -> usize {
        match self.engine {
            Engine::Clonal => self.clonal.as_ref().map_or(0, |c| c.injections.len()),
            Engine::Spatial => self.spatial.as_ref().map_or(0, |s| s.injections.len()),
        }
    }
}
