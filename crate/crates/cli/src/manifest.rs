use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub name: String,
    pub seconds: f64,
    /// Set for stages that can be served from the cache.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_hit: Option<bool>,
}

/// Record of one invocation, written to `manifest.json` in the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub threads: usize,
    pub versions: BTreeMap<String, String>,
    pub stages: Vec<StageTiming>,
    /// Files written to the output directory, relative to it.
    pub outputs: Vec<String>,
    /// Files written to the cache.
    pub cache_files: Vec<PathBuf>,
}

pub const MANIFEST: &str = "manifest.json";

/// Output directory plus the manifest under construction.
pub struct Run {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
}

impl Run {
    pub fn new(command: &str, out_dir: PathBuf, config_hash: String, seed: u64) -> Self {
        let versions = BTreeMap::from([
            ("allocq".to_string(), allocq::VERSION.to_string()),
            ("allocq-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ]);
        let manifest = RunManifest {
            command: command.to_string(),
            config_hash,
            seed,
            threads: rayon_threads(),
            versions,
            stages: Vec::new(),
            outputs: Vec::new(),
            cache_files: Vec::new(),
        };
        Self { out_dir, manifest }
    }

    /// Runs `f` and records its wall time under `name`.
    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T, CliError>) -> Result<T, CliError> {
        let start = Instant::now();
        let out = f(self)?;
        self.manifest.stages.push(StageTiming { name: name.to_string(), seconds: start.elapsed().as_secs_f64(), cache_hit: None });
        Ok(out)
    }

    pub fn mark_cache(&mut self, hit: bool) {
        if let Some(s) = self.manifest.stages.last_mut() {
            s.cache_hit = Some(hit);
        }
    }

    /// Creates `name` in the output directory and records it.
    pub fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        std::fs::create_dir_all(&self.out_dir)?;
        let file = File::create(self.out_dir.join(name))?;
        if !self.manifest.outputs.iter().any(|o| o == name) {
            self.manifest.outputs.push(name.to_string());
        }
        Ok(BufWriter::new(file))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let w = self.create(name)?;
        serde_json::to_writer_pretty(w, value).map_err(|e| CliError::Other(format!("cannot write {name}: {e}")))
    }

    pub fn record_cache_files(&mut self, files: impl IntoIterator<Item = PathBuf>) {
        self.manifest.cache_files.extend(files);
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.manifest.outputs.push(MANIFEST.to_string());
        let path = self.out_dir.join(MANIFEST);
        std::fs::create_dir_all(&self.out_dir)?;
        let text = serde_json::to_string_pretty(&self.manifest).map_err(|e| CliError::Other(e.to_string()))?;
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

fn rayon_threads() -> usize {
    allocq::current_threads()
}

/// Peak resident set size of this process in bytes, where the platform reports it.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}
