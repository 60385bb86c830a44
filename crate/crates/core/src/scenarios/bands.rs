use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::alloc::{allocate, build_queue, repair_inputs, AllocationMode, GroupId, IncrementMatrix};

/// Which outcomes a draw perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbTarget {
    /// Each group's baseline `A_g`, one shock per group.
    #[default]
    Baseline,
    /// Every level `A_g + alpha_1 + ... + alpha_l`, one shock per level.
    Levels,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandsConfig {
    pub draws: usize,
    /// Standard deviation of the multiplicative shock.
    pub sigma: f64,
    pub target: PerturbTarget,
    /// Lower band quantile; the upper one is `1 - tail`.
    pub tail: f64,
    /// Attempts per draw before giving up on inputs that cannot be repaired.
    pub max_attempts: usize,
}

impl Default for BandsConfig {
    fn default() -> Self {
        Self { draws: 500, sigma: 0.10, target: PerturbTarget::Baseline, tail: 0.025, max_attempts: 100 }
    }
}

impl BandsConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.draws == 0 || self.max_attempts == 0 {
            return Err(ScenarioError::Config("bands need at least one draw and one attempt".into()));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(ScenarioError::Config(format!("sigma must be non-negative, got {}", self.sigma)));
        }
        if !(self.tail > 0.0 && self.tail < 0.5) {
            return Err(ScenarioError::Config(format!("tail must lie in (0, 0.5), got {}", self.tail)));
        }
        Ok(())
    }
}

/// Per-group allocation quantiles across perturbed draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bands {
    pub group_ids: Vec<GroupId>,
    pub benchmark: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub draws: usize,
    /// Draws rejected because repair could not restore positive gains.
    pub redraws: usize,
    /// Accepted draws whose gains needed clipping.
    pub repaired: usize,
    /// Share of groups whose benchmark lies outside its band.
    pub outside_share: f64,
}

/// Quantile with linear interpolation between order statistics (type 7).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn shock(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    (sigma * z).max(-0.5)
}

fn perturb(matrix: &IncrementMatrix, rng: &mut ChaCha8Rng, config: &BandsConfig) -> Result<IncrementMatrix, ScenarioError> {
    Ok(matrix.map_groups(|g| {
        let mut g = g.clone();
        match config.target {
            PerturbTarget::Baseline => g.baseline *= 1.0 + shock(rng, config.sigma),
            PerturbTarget::Levels => {
                let levels: Vec<f64> =
                    (0..=g.alphas.len()).map(|l| g.level(l) * (1.0 + shock(rng, config.sigma))).collect();
                g.baseline = levels[0];
                g.alphas = levels.windows(2).map(|w| w[1] - w[0]).collect();
            }
        }
        g
    })?)
}

struct Draw {
    counts: Vec<usize>,
    rejected: usize,
    repaired: bool,
}

/// Re-allocates `budget` on `draws` perturbed copies of `matrix` and reports
/// per-group quantiles. Draw `i` uses its own ChaCha8 stream of `seed`, so
/// results do not depend on the thread count.
pub fn perturbation_bands(
    matrix: &IncrementMatrix,
    lambda: f64,
    budget: f64,
    mode: AllocationMode,
    config: &BandsConfig,
    seed: u64,
) -> Result<Bands, ScenarioError> {
    config.validate()?;
    let benchmark = allocate(&build_queue(matrix, lambda)?, matrix, budget, mode)?.counts;
    let draws: Vec<Draw> = (0..config.draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut rejected = 0;
            loop {
                let candidate = perturb(matrix, &mut rng, config)?;
                match repair_inputs(&candidate, 0.0) {
                    Ok((m, report)) => {
                        let counts = allocate(&build_queue(&m, lambda)?, &m, budget, mode)?.counts;
                        return Ok(Draw { counts, rejected, repaired: !report.is_clean() });
                    }
                    Err(_) if rejected + 1 < config.max_attempts => rejected += 1,
                    Err(e) => return Err(e.into()),
                }
            }
        })
        .collect::<Result<_, ScenarioError>>()?;
    let n = matrix.len();
    let (mut lower, mut upper) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut outside = 0;
    for g in 0..n {
        let mut v: Vec<f64> = draws.iter().map(|d| d.counts[g] as f64).collect();
        v.sort_by(f64::total_cmp);
        let (lo, hi) = (quantile(&v, config.tail), quantile(&v, 1.0 - config.tail));
        let b = benchmark[g] as f64;
        if b < lo || b > hi {
            outside += 1;
        }
        lower.push(lo);
        upper.push(hi);
    }
    Ok(Bands {
        group_ids: matrix.groups().iter().map(|g| g.id).collect(),
        benchmark,
        lower,
        upper,
        draws: config.draws,
        redraws: draws.iter().map(|d| d.rejected).sum(),
        repaired: draws.iter().filter(|d| d.repaired).count(),
        outside_share: if n > 0 { outside as f64 / n as f64 } else { 0.0 },
    })
}
