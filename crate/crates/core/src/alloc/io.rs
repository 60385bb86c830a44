//! CSV formats for increment matrices and exported queues.
//!
//! Matrix files have the header
//! `group_id,beta,A,mass,increment_cost,lower_bound,alpha_1,...,alpha_L`;
//! groups with fewer increments leave trailing cells empty. Reals are written
//! with 17 significant digits so files round-trip exactly.

use std::io::{Read, Write};

use super::{AllocError, AllocationQueue, GroupRecord, IncrementMatrix};

const MATRIX_COLUMNS: [&str; 6] = ["group_id", "beta", "A", "mass", "increment_cost", "lower_bound"];

/// Formats a real with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> AllocError {
    AllocError::Malformed(e.to_string())
}

pub fn write_matrix<W: Write>(matrix: &IncrementMatrix, out: W) -> Result<(), AllocError> {
    let width = matrix.groups().iter().map(|g| g.upper_bound()).max().unwrap_or(0);
    let mut w = csv::WriterBuilder::new().flexible(false).from_writer(out);
    let mut header: Vec<String> = MATRIX_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((1..=width).map(|l| format!("alpha_{l}")));
    w.write_record(&header).map_err(csv_err)?;
    for g in matrix.groups() {
        let mut row = vec![
            g.id.to_string(),
            fmt_real(g.beta),
            fmt_real(g.baseline),
            fmt_real(g.mass),
            fmt_real(g.increment_cost),
            g.lower_bound.to_string(),
        ];
        row.extend(g.alphas.iter().map(|&a| fmt_real(a)));
        row.resize(MATRIX_COLUMNS.len() + width, String::new());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| AllocError::Malformed(e.to_string()))
}

pub fn read_matrix<R: Read>(input: R) -> Result<IncrementMatrix, AllocError> {
    let mut r = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    for (i, name) in MATRIX_COLUMNS.iter().enumerate() {
        if header.get(i) != Some(*name) {
            return Err(AllocError::Malformed(format!("column {} must be `{name}`", i + 1)));
        }
    }
    for (i, name) in header.iter().enumerate().skip(MATRIX_COLUMNS.len()) {
        if name != format!("alpha_{}", i + 1 - MATRIX_COLUMNS.len()) {
            return Err(AllocError::Malformed(format!("unexpected column `{name}`")));
        }
    }
    let mut groups = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let at = |what: &str| AllocError::Malformed(format!("row {}: bad {what}", line + 2));
        let real = |i: usize, what: &str| -> Result<f64, AllocError> {
            rec.get(i).and_then(|s| s.parse::<f64>().ok()).ok_or_else(|| at(what))
        };
        let id = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| at("group_id"))?;
        let lower_bound = rec.get(5).and_then(|s| s.parse().ok()).ok_or_else(|| at("lower_bound"))?;
        let mut alphas = Vec::new();
        let mut ended = false;
        for (l, cell) in rec.iter().enumerate().skip(MATRIX_COLUMNS.len()) {
            if cell.is_empty() {
                ended = true;
            } else if ended {
                return Err(at("alpha tail (gap before a value)"));
            } else {
                alphas.push(cell.parse().map_err(|_| at(&format!("alpha_{}", l - 5)))?);
            }
        }
        groups.push(GroupRecord {
            id,
            baseline: real(2, "A")?,
            alphas,
            beta: real(1, "beta")?,
            lower_bound,
            mass: real(3, "mass")?,
            increment_cost: real(4, "increment_cost")?,
        });
    }
    IncrementMatrix::new(groups)
}

/// Writes `rank,group_id,increment_index,key,cumulative_cost`, one row per entry.
pub fn write_queue<W: Write>(queue: &AllocationQueue, matrix: &IncrementMatrix, out: W) -> Result<(), AllocError> {
    queue.check_matrix(matrix)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rank", "group_id", "increment_index", "key", "cumulative_cost"])
        .map_err(csv_err)?;
    let groups = matrix.groups();
    let mut cumulative = 0.0;
    for (rank, e) in queue.entries().iter().enumerate() {
        cumulative += groups[e.group as usize].increment_cost;
        w.write_record([
            (rank + 1).to_string(),
            queue.group_id(e).to_string(),
            e.increment.to_string(),
            fmt_real(queue.key(e)),
            fmt_real(cumulative),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| AllocError::Malformed(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_with_ragged_tails() {
        let mut g = GroupRecord::unit(4, 0.1 + 0.2, vec![1.0 / 3.0, 0.25], 2.5);
        g.lower_bound = 1;
        g.mass = 1e-7;
        g.increment_cost = 3.7e-5;
        let m = IncrementMatrix::new(vec![g, GroupRecord::unit(2, 1.0, vec![0.5], 1.0)]).unwrap();
        let mut buf = Vec::new();
        write_matrix(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("group_id,beta,A,mass,increment_cost,lower_bound,alpha_1,alpha_2\n"));
        assert_eq!(read_matrix(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn rejects_gaps_and_bad_headers() {
        let gap = "group_id,beta,A,mass,increment_cost,lower_bound,alpha_1,alpha_2,alpha_3\n1,1,1,1,1,0,0.5,,0.2\n";
        assert!(read_matrix(gap.as_bytes()).is_err());
        let bad = "id,beta,A,mass,increment_cost,lower_bound\n1,1,1,1,1,0\n";
        assert!(read_matrix(bad.as_bytes()).is_err());
    }
}
