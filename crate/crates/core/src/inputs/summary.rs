use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::conditionals::GroupConditionals;
use super::groups::GroupDefinition;
use super::InputsError;
use crate::alloc::GroupId;

/// Definition and pre-crisis moments of one group, as stored next to a
/// persisted matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group_id: GroupId,
    pub m: Option<u8>,
    pub k: Option<usize>,
    pub income_lo: f64,
    pub income_hi: f64,
    pub age_lo: u32,
    pub age_hi: u32,
    pub mass: f64,
    pub mean_income: f64,
    pub mean_tax: f64,
    pub mean_size: f64,
}

impl GroupSummary {
    pub fn definition(&self) -> GroupDefinition {
        GroupDefinition {
            id: self.group_id,
            income_lo: self.income_lo,
            income_hi: self.income_hi,
            age_lo: self.age_lo,
            age_hi: self.age_hi,
            married: self.m.map(|m| m > 0),
            k: self.k,
        }
    }
}

impl GroupConditionals {
    /// Summary of group `g`.
    pub fn summary(&self, g: usize) -> GroupSummary {
        let def = &self.groups.groups[g];
        GroupSummary {
            group_id: def.id,
            m: def.married.map(u8::from),
            k: def.k,
            income_lo: def.income_lo,
            income_hi: def.income_hi,
            age_lo: def.age_lo,
            age_hi: def.age_hi,
            mass: self.masses[g],
            mean_income: self.mean_income[g],
            mean_tax: self.mean_tax[g],
            mean_size: self.mean_size[g],
        }
    }
}

fn csv_err(e: csv::Error) -> InputsError {
    InputsError::Io(std::io::Error::other(e))
}

pub fn write_group_summaries<W: Write>(groups: &[GroupSummary], out: W) -> Result<(), InputsError> {
    let mut w = csv::Writer::from_writer(out);
    for g in groups {
        w.serialize(g).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_group_summaries<R: Read>(input: R) -> Result<Vec<GroupSummary>, InputsError> {
    csv::Reader::from_reader(input).deserialize().collect::<Result<_, _>>().map_err(csv_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let g = vec![
            GroupSummary {
                group_id: 0,
                m: Some(1),
                k: Some(2),
                income_lo: 0.0,
                income_hi: 5000.0,
                age_lo: 22,
                age_hi: 100,
                mass: 0.01,
                mean_income: 2500.5,
                mean_tax: 10.25,
                mean_size: 4.0,
            },
            GroupSummary {
                group_id: 1,
                m: None,
                k: None,
                income_lo: 200_000.0,
                income_hi: f64::INFINITY,
                age_lo: 22,
                age_hi: 100,
                mass: 0.02,
                mean_income: 250_000.0,
                mean_tax: 50_000.0,
                mean_size: 2.5,
            },
        ];
        let mut buf = Vec::new();
        write_group_summaries(&g, &mut buf).unwrap();
        assert_eq!(read_group_summaries(buf.as_slice()).unwrap(), g);
        assert_eq!(g[0].definition().adults(), Some(2));
    }
}
