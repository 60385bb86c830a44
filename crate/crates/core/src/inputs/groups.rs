use serde::{Deserialize, Serialize};

use super::InputsError;
use crate::alloc::GroupId;
use crate::lifecycle::CHILD_STATES;

/// How households are partitioned into allocation groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroupSpec {
    /// Width of the income bins in dollars when `income_edges` is not given.
    pub income_step: f64,
    /// Lower edge of the open top income bin when `income_edges` is not given.
    pub income_top: f64,
    /// Explicit lower bin edges in dollars, starting at 0; the last bin is open.
    pub income_edges: Option<Vec<f64>>,
    /// One group per age instead of pooling all ages.
    pub age_specific: bool,
    /// Pool marital status and children into a single cell.
    pub pool_family: bool,
    /// Treat each productivity node as its discretization cell when binning
    /// income: workers' earnings are spread uniformly in logs over the cell.
    pub spread_productivity: bool,
}

impl Default for GroupSpec {
    fn default() -> Self {
        Self { income_step: 5_000.0, income_top: 200_000.0, income_edges: None, age_specific: false, pool_family: false, spread_productivity: true }
    }
}

impl GroupSpec {
    /// $500 bins up to $225,000, then $5,000 bins, one group per age.
    pub fn full_scale() -> Self {
        let mut edges: Vec<f64> = (0..450).map(|i| 500.0 * i as f64).collect();
        edges.extend((0..31).map(|i| 225_000.0 + 5_000.0 * i as f64));
        Self { income_edges: Some(edges), age_specific: true, ..Self::default() }
    }

    /// Lower edges of the income bins.
    pub fn edges(&self) -> Vec<f64> {
        match &self.income_edges {
            Some(e) => e.clone(),
            None => {
                let n = (self.income_top / self.income_step).round() as usize;
                (0..=n).map(|i| self.income_step * i as f64).collect()
            }
        }
    }
}

/// One allocation cell: an income bin, an age band, marital status and children.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDefinition {
    pub id: GroupId,
    pub income_lo: f64,
    /// `f64::INFINITY` for the open top bin.
    pub income_hi: f64,
    pub age_lo: u32,
    pub age_hi: u32,
    /// `None` when marital status is pooled.
    pub married: Option<bool>,
    /// `None` when children are pooled.
    pub k: Option<usize>,
}

impl GroupDefinition {
    /// Household members, or `None` for pooled family cells.
    pub fn household_size(&self) -> Option<f64> {
        Some(1.0 + self.married? as u8 as f64 + self.k? as f64)
    }

    pub fn adults(&self) -> Option<usize> {
        Some(1 + self.married? as usize)
    }
}

/// Partition of the populated state space.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSet {
    pub groups: Vec<GroupDefinition>,
    pub spread_productivity: bool,
    edges: Vec<f64>,
    age_bands: Vec<(u32, u32)>,
    pooled: bool,
}

/// Builds the groups for households aged `first_age..=last_age`. Ids run over
/// marital status, then children, then income bin, then age band.
pub fn define_groups(spec: &GroupSpec, first_age: u32, last_age: u32) -> Result<GroupSet, InputsError> {
    let edges = spec.edges();
    if edges.first() != Some(&0.0) {
        return Err(InputsError::Overlap("income bins must start at 0".into()));
    }
    if let Some(w) = edges.windows(2).find(|w| !(w[0] < w[1])) {
        return Err(InputsError::Overlap(format!("income edges {} and {} are not increasing", w[0], w[1])));
    }
    if first_age > last_age {
        return Err(InputsError::Overlap("empty age range".into()));
    }
    let age_bands: Vec<(u32, u32)> = if spec.age_specific {
        (first_age..=last_age).map(|a| (a, a)).collect()
    } else {
        vec![(first_age, last_age)]
    };
    let cells: Vec<(Option<bool>, Option<usize>)> = if spec.pool_family {
        vec![(None, None)]
    } else {
        [false, true].iter().flat_map(|&m| (0..CHILD_STATES).map(move |k| (Some(m), Some(k)))).collect()
    };
    let mut groups = Vec::with_capacity(cells.len() * edges.len() * age_bands.len());
    for &(married, k) in &cells {
        for (b, &lo) in edges.iter().enumerate() {
            let hi = edges.get(b + 1).copied().unwrap_or(f64::INFINITY);
            for &(age_lo, age_hi) in &age_bands {
                let id = groups.len() as GroupId;
                groups.push(GroupDefinition { id, income_lo: lo, income_hi: hi, age_lo, age_hi, married, k });
            }
        }
    }
    Ok(GroupSet { groups, spread_productivity: spec.spread_productivity, edges, age_bands, pooled: spec.pool_family })
}

impl GroupSet {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn income_bins(&self) -> usize {
        self.edges.len()
    }

    /// Lower income edges of the bins.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Index of the group containing a household, if any.
    pub fn locate(&self, income: f64, age: u32, married: bool, k: usize) -> Option<usize> {
        if income < 0.0 {
            return None;
        }
        let bin = self.edges.partition_point(|e| *e <= income) - 1;
        self.group_of_bin(bin, age, married, k)
    }

    /// Group of income bin `bin` for the given age and family.
    pub fn group_of_bin(&self, bin: usize, age: u32, married: bool, k: usize) -> Option<usize> {
        if k >= CHILD_STATES || bin >= self.edges.len() {
            return None;
        }
        let band = self.age_bands.iter().position(|&(lo, hi)| lo <= age && age <= hi)?;
        let cell = if self.pooled { 0 } else { married as usize * CHILD_STATES + k };
        Some((cell * self.edges.len() + bin) * self.age_bands.len() + band)
    }
}
