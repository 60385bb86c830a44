use log::debug;
use serde::{Deserialize, Serialize};

use super::children::CHILD_STATES;
use super::tables::EMBEDDED_INITIAL_CONDITIONS;
use super::CalibrationError;

/// Largest rounding error in a published probability block that is fixed by
/// rescaling rather than rejected.
pub const BLOCK_RESCALE_LIMIT: f64 = 0.01;

/// Entry-age composition as published: college share, single share by
/// education, and child distributions by education and marital status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialConditionsTable {
    pub college: f64,
    /// `P(single | e)` indexed by `[non-college, college]`.
    pub single: [f64; 2],
    /// `children[e][m][k]` with `m = 0` single, `m = 1` married.
    pub children: [[[f64; CHILD_STATES]; 2]; 2],
}

impl InitialConditionsTable {
    pub fn from_csv(text: &str) -> Result<Self, CalibrationError> {
        let mut t = InitialConditionsTable { college: f64::NAN, single: [f64::NAN; 2], children: [[[f64::NAN; 5]; 2]; 2] };
        let edu = |s: &str| match s {
            "noncollege" => Ok(0),
            "college" => Ok(1),
            _ => Err(CalibrationError::Table(format!("unknown education `{s}`"))),
        };
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        for rec in r.records() {
            let rec = rec.map_err(|e| CalibrationError::Table(e.to_string()))?;
            let value: f64 = rec
                .get(4)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CalibrationError::Table("bad value".into()))?;
            match rec.get(0).unwrap_or_default() {
                "college" => t.college = value,
                "single" => t.single[edu(&rec[1])?] = value,
                "children" => {
                    let m = match &rec[2] {
                        "single" => 0,
                        "married" => 1,
                        s => return Err(CalibrationError::Table(format!("unknown marital status `{s}`"))),
                    };
                    let k: usize = rec[3].parse().map_err(|_| CalibrationError::Table("bad child count".into()))?;
                    if k >= CHILD_STATES {
                        return Err(CalibrationError::Table(format!("child count {k} out of range")));
                    }
                    t.children[edu(&rec[1])?][m][k] = value;
                }
                other => return Err(CalibrationError::Table(format!("unknown quantity `{other}`"))),
            }
        }
        let all = std::iter::once(t.college).chain(t.single).chain(t.children.iter().flatten().flatten().copied());
        if all.clone().any(|p| p.is_nan()) {
            return Err(CalibrationError::Table("initial-conditions table is incomplete".into()));
        }
        Ok(t)
    }
}

impl Default for InitialConditionsTable {
    fn default() -> Self {
        Self::from_csv(EMBEDDED_INITIAL_CONDITIONS).expect("embedded initial-conditions table is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialDistribution {
    /// `prob[e][m][k]`, summing to one.
    pub prob: [[[f64; CHILD_STATES]; 2]; 2],
}

impl InitialDistribution {
    pub fn get(&self, college: bool, married: bool, k: usize) -> f64 {
        self.prob[college as usize][married as usize][k]
    }

    pub fn college_share(&self) -> f64 {
        self.prob[1].iter().flatten().sum()
    }
}

/// Joint entry distribution over `(e, m, k)`. Child blocks that miss 1 by
/// rounding are rescaled; larger gaps are errors.
pub fn initial_distribution(table: &InitialConditionsTable) -> Result<InitialDistribution, CalibrationError> {
    let unit = |p: f64, what: &str| {
        if (0.0..=1.0).contains(&p) {
            Ok(p)
        } else {
            Err(CalibrationError::Normalization(format!("{what} = {p}")))
        }
    };
    let college = unit(table.college, "college share")?;
    let mut prob = [[[0.0; CHILD_STATES]; 2]; 2];
    for e in 0..2 {
        let p_e = if e == 1 { college } else { 1.0 - college };
        let single = unit(table.single[e], "single share")?;
        for m in 0..2 {
            let p_m = if m == 0 { single } else { 1.0 - single };
            let block = &table.children[e][m];
            if block.iter().any(|p| *p < 0.0) {
                return Err(CalibrationError::Normalization("negative child probability".into()));
            }
            let total: f64 = block.iter().sum();
            if (total - 1.0).abs() > BLOCK_RESCALE_LIMIT {
                return Err(CalibrationError::Normalization(format!(
                    "child block (e={e}, m={m}) sums to {total}"
                )));
            }
            if (total - 1.0).abs() > 1e-6 {
                debug!("child block (e={e}, m={m}) sums to {total}; rescaling");
            }
            for k in 0..CHILD_STATES {
                prob[e][m][k] = p_e * p_m * block[k] / total;
            }
        }
    }
    Ok(InitialDistribution { prob })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_marginals() {
        let d = initial_distribution(&InitialConditionsTable::default()).unwrap();
        assert!((d.college_share() - 0.303).abs() < 1e-12);
        let nc_single: f64 = d.prob[0][0].iter().sum();
        assert!((d.get(false, false, 0) / nc_single - 0.733).abs() < 1e-12);
        let total: f64 = d.prob.iter().flatten().flatten().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_broken_blocks() {
        let mut t = InitialConditionsTable::default();
        t.children[0][1][0] = 0.9;
        assert!(matches!(initial_distribution(&t), Err(CalibrationError::Normalization(_))));
    }
}
