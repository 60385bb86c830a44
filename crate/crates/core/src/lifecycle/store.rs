//! On-disk snapshot of a solved equilibrium: the calibrated parameters and
//! scalars as JSON, the policy and mass arrays as little-endian `f64`.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::distribution::{Distribution, StateSummary};
use super::equilibrium::Equilibrium;
use super::model::Model;
use super::params::ModelParams;
use super::solver::SteadyState;
use super::LifecycleError;

const META: &str = "equilibrium.json";
const ARRAYS: &str = "equilibrium.bin";

#[derive(Serialize, Deserialize)]
struct Meta {
    params: ModelParams,
    summary: StateSummary,
    revenue_need: f64,
    iterations: usize,
    converged: bool,
    grid_escapes: usize,
    per_age: usize,
    len: usize,
}

fn json_err(e: serde_json::Error) -> LifecycleError {
    LifecycleError::Io(std::io::Error::other(e))
}

/// Writes `equilibrium.json` and `equilibrium.bin` into `dir` and returns their paths.
pub fn save_equilibrium(eq: &Equilibrium, dir: &Path) -> Result<Vec<std::path::PathBuf>, LifecycleError> {
    fs::create_dir_all(dir)?;
    let steady = &eq.steady;
    let meta = Meta {
        params: eq.model.params.clone(),
        summary: eq.summary,
        revenue_need: eq.revenue_need,
        iterations: eq.iterations,
        converged: eq.converged,
        grid_escapes: steady.grid_escapes,
        per_age: steady.per_age(),
        len: steady.values.len(),
    };
    let meta_path = dir.join(META);
    fs::write(&meta_path, serde_json::to_vec_pretty(&meta).map_err(json_err)?)?;
    let bin_path = dir.join(ARRAYS);
    let mut w = BufWriter::new(fs::File::create(&bin_path)?);
    for array in [&steady.values, &steady.savings, &steady.consumption, &eq.distribution.mass] {
        for x in array.iter() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(vec![meta_path, bin_path])
}

/// Whether `dir` holds a snapshot written by [`save_equilibrium`].
pub fn has_equilibrium(dir: &Path) -> bool {
    dir.join(META).is_file() && dir.join(ARRAYS).is_file()
}

fn read_array(r: &mut impl Read, len: usize) -> Result<Vec<f64>, LifecycleError> {
    let mut bytes = vec![0u8; len * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect())
}

/// Rebuilds the model from the stored parameters and reattaches the stored arrays.
pub fn load_equilibrium(dir: &Path) -> Result<Equilibrium, LifecycleError> {
    let meta: Meta = serde_json::from_slice(&fs::read(dir.join(META))?).map_err(json_err)?;
    let model = Model::new(meta.params)?;
    let per_age = model.layout.per_age();
    if per_age != meta.per_age || meta.len != per_age * model.periods() {
        return Err(LifecycleError::Config("stored equilibrium does not match its parameters".into()));
    }
    let file = fs::File::open(dir.join(ARRAYS))?;
    if file.metadata()?.len() != (4 * meta.len * 8) as u64 {
        return Err(LifecycleError::Config("stored equilibrium arrays have the wrong size".into()));
    }
    let mut r = BufReader::new(file);
    let values = read_array(&mut r, meta.len)?;
    let savings = read_array(&mut r, meta.len)?;
    let consumption = read_array(&mut r, meta.len)?;
    let mass = read_array(&mut r, meta.len)?;
    Ok(Equilibrium {
        model,
        steady: SteadyState { values, savings, consumption, grid_escapes: meta.grid_escapes, per_age },
        distribution: Distribution::from_mass(mass, per_age),
        summary: meta.summary,
        revenue_need: meta.revenue_need,
        iterations: meta.iterations,
        converged: meta.converged,
    })
}
