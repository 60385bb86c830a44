use std::io::Write;

use serde::Serialize;

use super::summary::GroupSummary;
use super::InputsError;
use crate::alloc::IncrementMatrix;

/// One row of the propensity table. `mpc` is missing at the last grid
/// point and `apc` at a zero transfer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MpcRow {
    pub group_id: u32,
    pub m: Option<u8>,
    pub k: Option<usize>,
    pub income_lo: f64,
    pub income_hi: f64,
    #[serde(rename = "D_dollars")]
    pub d_dollars: f64,
    #[serde(rename = "MPC")]
    pub mpc: Option<f64>,
    #[serde(rename = "APC")]
    pub apc: Option<f64>,
}

/// Marginal and average propensities to consume at `D = 0, step, ...` for a
/// consumption matrix whose gains are dollars per `step`-dollar increment.
/// `groups` must be sorted by id.
pub fn mpc_apc_table(matrix: &IncrementMatrix, groups: &[GroupSummary], step: f64) -> Result<Vec<MpcRow>, InputsError> {
    if !(step > 0.0) {
        return Err(InputsError::Invalid("increment size must be positive".into()));
    }
    let mut rows = Vec::new();
    for g in matrix.groups() {
        let def = groups
            .binary_search_by_key(&g.id, |s| s.group_id)
            .map(|i| &groups[i])
            .map_err(|_| InputsError::Invalid(format!("group {} is not in the group set", g.id)))?;
        let mut cumulative = 0.0;
        for l in 0..=g.alphas.len() {
            let d = step * l as f64;
            rows.push(MpcRow {
                group_id: g.id,
                m: def.m,
                k: def.k,
                income_lo: def.income_lo,
                income_hi: def.income_hi,
                d_dollars: d,
                mpc: g.alphas.get(l).map(|a| a / step),
                apc: (l > 0).then(|| cumulative / d),
            });
            if let Some(a) = g.alphas.get(l) {
                cumulative += a;
            }
        }
    }
    Ok(rows)
}

/// Writes the table as CSV with columns
/// `group_id,m,k,income_lo,income_hi,D_dollars,MPC,APC`.
pub fn write_mpc_table<W: Write>(rows: &[MpcRow], out: W) -> Result<(), InputsError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| InputsError::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alloc::GroupRecord;

    #[test]
    fn running_mean_identity() {
        let groups = vec![GroupSummary {
            group_id: 3,
            m: Some(0),
            k: Some(0),
            income_lo: 0.0,
            income_hi: 5000.0,
            age_lo: 22,
            age_hi: 100,
            mass: 0.1,
            mean_income: 2500.0,
            mean_tax: 0.0,
            mean_size: 1.0,
        }];
        let m = IncrementMatrix::new(vec![GroupRecord::unit(3, 1000.0, vec![60.0, 50.0, 40.0], 1.0)]).unwrap();
        let rows = mpc_apc_table(&m, &groups, 100.0).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].apc, None);
        assert_eq!(rows[0].mpc, Some(0.6));
        assert_eq!(rows[1].apc, Some(0.6));
        assert!((rows[2].apc.unwrap() - 0.55).abs() < 1e-15);
        assert_eq!(rows[3].mpc, None);
        for r in &rows[1..3] {
            assert!(r.apc.unwrap() >= r.mpc.unwrap());
        }
        let mut buf = Vec::new();
        write_mpc_table(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("group_id,m,k,income_lo,income_hi,D_dollars,MPC,APC\n"));
    }
}
