//! Run configuration: a TOML file with `[model]`, `[inputs]`, `[scenario]`
//! and `[output]` sections, overridable through `ALLOCQ_<SECTION>__<KEY>`
//! environment variables.

use std::path::{Path, PathBuf};

use allocq::lifecycle::ModelParams;
use allocq::scenarios::{InputsConfig, Scenario, ScenarioConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const ENV_PREFIX: &str = "ALLOCQ_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub cache_dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("allocq-out"), cache_dir: PathBuf::from("allocq-cache") }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub model: ModelParams,
    pub inputs: InputsConfig,
    pub scenario: ScenarioConfig,
    pub output: OutputConfig,
}

/// Parses an override value as a TOML value, falling back to a bare string.
fn override_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_override(table: &mut toml::Table, path: &[String], value: toml::Value) -> Result<(), CliError> {
    let (last, parents) = path.split_last().expect("non-empty override path");
    let mut cur = table;
    for p in parents {
        let entry = cur.entry(p.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override {} addresses a non-table value", path.join("."))))?;
    }
    cur.insert(last.clone(), value);
    Ok(())
}

impl Config {
    /// Reads `path` (defaults when `None`), applies `vars` of the form
    /// `ALLOCQ_SECTION__KEY=value`, and validates the result.
    pub fn load(path: Option<&Path>, vars: impl IntoIterator<Item = (String, String)>) -> Result<Self, CliError> {
        let (text, origin) = match path {
            Some(p) => (
                std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?,
                p.display().to_string(),
            ),
            None => (String::new(), "defaults".to_string()),
        };
        // Parsing the file on its own keeps line and column numbers in the diagnostics.
        let mut config: Config = toml::from_str(&text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        let overrides: Vec<(Vec<String>, String)> = vars
            .into_iter()
            .filter_map(|(k, v)| {
                let rest = k.strip_prefix(ENV_PREFIX)?;
                Some((rest.split("__").map(|s| s.to_ascii_lowercase()).collect::<Vec<String>>(), v))
            })
            .filter(|(p, _)| p.iter().all(|s| !s.is_empty()))
            .collect();
        if !overrides.is_empty() {
            let mut table: toml::Table = toml::from_str(&text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
            for (path, raw) in &overrides {
                apply_override(&mut table, path, override_value(raw))?;
            }
            config = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| {
                let names: Vec<String> = overrides.iter().map(|(p, _)| p.join(".")).collect();
                CliError::Config(format!("{origin} with overrides [{}]: {e}", names.join(", ")))
            })?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model.validate()?;
        self.inputs.validate()?;
        self.scenario.validate()?;
        Ok(())
    }

    /// Hash of the whole configuration.
    pub fn hash(&self) -> String {
        hash_of(self)
    }

    /// Hash of the model section, which keys the equilibrium cache.
    pub fn model_hash(&self) -> String {
        hash_of(&self.model)
    }

    /// Hash of everything the scenario's input matrix depends on.
    pub fn inputs_hash(&self, scenario: Scenario) -> String {
        hash_of(&(&self.model, &self.inputs, scenario))
    }
}

/// SHA-256 of the canonical JSON form: object keys sorted, numbers in
/// shortest round-trip notation.
pub fn hash_of<T: Serialize>(value: &T) -> String {
    let canonical = serde_json::to_value(value).expect("configuration serializes to JSON").to_string();
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(list: &[(&str, &str)]) -> Vec<(String, String)> {
        list.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn env_overrides_nested_keys() {
        let c = Config::load(
            None,
            vars(&[("ALLOCQ_MODEL__GAMMA", "3"), ("ALLOCQ_MODEL__GRIDS__N_ASSETS", "20"), ("OTHER", "x")]),
        )
        .unwrap();
        assert_eq!((c.model.gamma, c.model.grids.n_assets), (3.0, 20));
        let c = Config::load(None, vars(&[("ALLOCQ_SCENARIO__SCENARIO", "welfare2021")])).unwrap();
        assert_eq!(c.scenario.scenario, Scenario::Welfare2021);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = Config::default();
        assert_eq!(a.hash(), Config::default().hash());
        assert_eq!(a.hash().len(), 64);
        let mut b = a.clone();
        b.scenario.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.model_hash(), b.model_hash());
        assert_ne!(a.inputs_hash(Scenario::Stimulus2008), a.inputs_hash(Scenario::Welfare2021));
    }

    #[test]
    fn unknown_field_is_reported() {
        let dir = std::env::temp_dir().join(format!("allocq-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("bad.toml");
        std::fs::write(&p, "[model]\ngamma = 2.0\ngama = 3.0\n").unwrap();
        let e = Config::load(Some(&p), Vec::new()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let msg = e.to_string();
        assert!(msg.contains("gama") && msg.contains("line 3"), "{msg}");
        std::fs::write(&p, "[model]\ngamma = 1.0\n").unwrap();
        assert_eq!(Config::load(Some(&p), Vec::new()).unwrap_err().exit_code(), 2);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
