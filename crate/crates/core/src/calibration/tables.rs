//! Parameter tables shipped under `data/` and their parsers.
//!
//! Every loader accepts the file text so a run can substitute its own copy.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::CalibrationError;

pub const EMBEDDED_EXTERNAL_PARAMETERS: &str = include_str!("../../../../data/table_a1_external_parameters.csv");
pub const EMBEDDED_EQUILIBRIUM_PARAMETERS: &str = include_str!("../../../../data/table_a2_equilibrium_parameters.csv");
pub const EMBEDDED_INITIAL_CONDITIONS: &str = include_str!("../../../../data/table_a3_initial_conditions.csv");
pub const EMBEDDED_CHILD_TRANSITIONS: &str = include_str!("../../../../data/table_a4_child_transitions.csv");
pub const EMBEDDED_SPOUSAL_INCOME: &str = include_str!("../../../../data/table_a5_spousal_income.csv");
pub const EMBEDDED_SURVIVAL: &str = include_str!("../../../../data/survival.csv");
pub const EMBEDDED_LABOR_PRODUCTIVITY: &str = include_str!("../../../../data/labor_productivity.csv");
pub const EMBEDDED_UNEMPLOYMENT_2008: &str = include_str!("../../../../data/unemployment_2008.csv");
pub const EMBEDDED_UNEMPLOYMENT_2021: &str = include_str!("../../../../data/unemployment_2021.csv");

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn parse_f64(cell: Option<&str>, ctx: &str) -> Result<f64, CalibrationError> {
    cell.and_then(|s| s.parse().ok())
        .ok_or_else(|| CalibrationError::Table(format!("{ctx}: expected a number, got {cell:?}")))
}

/// `name,value[,...]` table.
#[derive(Debug, Clone, Default)]
pub struct NamedValues(HashMap<String, f64>);

impl NamedValues {
    pub fn get(&self, name: &str) -> Result<f64, CalibrationError> {
        self.0
            .get(name)
            .copied()
            .ok_or_else(|| CalibrationError::Table(format!("missing entry `{name}`")))
    }
}

pub fn named_values(text: &str) -> Result<NamedValues, CalibrationError> {
    let mut out = HashMap::new();
    for rec in reader(text).records() {
        let rec = rec.map_err(|e| CalibrationError::Table(e.to_string()))?;
        let name = rec.get(0).unwrap_or_default().to_string();
        let value = parse_f64(rec.get(1), &name)?;
        out.insert(name, value);
    }
    Ok(NamedValues(out))
}

/// Value per age in years, from a two-or-more column table keyed by `age`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeTable {
    pub first_age: u32,
    /// `columns[c][age - first_age]`.
    pub columns: Vec<Vec<f64>>,
}

impl AgeTable {
    pub fn from_csv(text: &str) -> Result<Self, CalibrationError> {
        let mut r = reader(text);
        let width = r.headers().map_err(|e| CalibrationError::Table(e.to_string()))?.len();
        if width < 2 {
            return Err(CalibrationError::Table("age table needs a value column".into()));
        }
        let mut first_age = None;
        let mut columns = vec![Vec::new(); width - 1];
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| CalibrationError::Table(e.to_string()))?;
            let age = parse_f64(rec.get(0), "age")? as u32;
            let first = *first_age.get_or_insert(age);
            if age != first + i as u32 {
                return Err(CalibrationError::Table(format!("ages must be consecutive, found {age}")));
            }
            for (c, col) in columns.iter_mut().enumerate() {
                col.push(parse_f64(rec.get(c + 1), "value")?);
            }
        }
        Ok(Self { first_age: first_age.unwrap_or(0), columns })
    }

    pub fn last_age(&self) -> u32 {
        self.first_age + self.columns[0].len() as u32 - 1
    }

    pub fn value(&self, column: usize, age: u32) -> Option<f64> {
        age.checked_sub(self.first_age).and_then(|i| self.columns[column].get(i as usize).copied())
    }
}

/// Probabilities by age band and education.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeBandTable {
    /// `(age_lo, age_hi, [non-college, college])`, inclusive bands.
    pub bands: Vec<(u32, u32, [f64; 2])>,
}

impl AgeBandTable {
    pub fn from_csv(text: &str) -> Result<Self, CalibrationError> {
        let mut bands = Vec::new();
        for rec in reader(text).records() {
            let rec = rec.map_err(|e| CalibrationError::Table(e.to_string()))?;
            let lo = parse_f64(rec.get(0), "age_lo")? as u32;
            let hi = parse_f64(rec.get(1), "age_hi")? as u32;
            let p = [parse_f64(rec.get(2), "noncollege")?, parse_f64(rec.get(3), "college")?];
            if lo > hi || p.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(CalibrationError::Table(format!("bad band {lo}-{hi}")));
            }
            bands.push((lo, hi, p));
        }
        Ok(Self { bands })
    }

    /// Zero outside every band.
    pub fn value(&self, age: u32, college: bool) -> f64 {
        self.bands
            .iter()
            .find(|(lo, hi, _)| (*lo..=*hi).contains(&age))
            .map_or(0.0, |b| b.2[college as usize])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_tables_parse() {
        let v = named_values(EMBEDDED_EXTERNAL_PARAMETERS).unwrap();
        assert_eq!(v.get("rho").unwrap(), 0.98);
        assert!(v.get("missing").is_err());
        let s = AgeTable::from_csv(EMBEDDED_SURVIVAL).unwrap();
        assert_eq!((s.first_age, s.last_age()), (18, 100));
        assert_eq!(s.value(0, 100), Some(0.0));
        let u = AgeBandTable::from_csv(EMBEDDED_UNEMPLOYMENT_2008).unwrap();
        assert_eq!(u.value(20, true), 0.08);
        assert_eq!(u.value(70, false), 0.0);
    }
}
