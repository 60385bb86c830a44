//! CSV dumps of solved policies keyed by state indices.

use std::io::Write;

use super::crisis::CashPolicy;
use super::model::Model;
use super::solver::SteadyState;
use super::LifecycleError;

const KEY_COLUMNS: [&str; 7] = ["age", "eta", "college", "married", "k", "patient", "nu"];

fn csv_err(e: csv::Error) -> LifecycleError {
    LifecycleError::Io(std::io::Error::other(e))
}

fn key_cells(model: &Model, j: usize, slice: usize, nu: Option<usize>) -> Vec<String> {
    let k = model.layout.key(slice);
    vec![
        model.params.age_of(j).to_string(),
        k.eta.to_string(),
        (k.college as u8).to_string(),
        (k.married as u8).to_string(),
        k.k.to_string(),
        (k.patient as u8).to_string(),
        nu.map_or(String::new(), |n| n.to_string()),
    ]
}

/// One row per grid state: keys, assets, value, savings and consumption.
pub fn write_policy<W: Write>(model: &Model, policy: &SteadyState, out: W) -> Result<(), LifecycleError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = KEY_COLUMNS.to_vec();
    header.extend(["assets", "value", "savings", "consumption"]);
    w.write_record(&header).map_err(csv_err)?;
    let l = model.layout;
    for j in 0..model.periods() {
        for idx in 0..l.per_age() {
            let (s, nu, a) = l.split(idx);
            let at = j * policy.per_age() + idx;
            let mut row = key_cells(model, j, s, Some(nu));
            row.extend([
                format!("{:e}", model.assets[a]),
                format!("{:e}", policy.values[at]),
                format!("{:e}", policy.savings[at]),
                format!("{:e}", policy.consumption[at]),
            ]);
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per cash-on-hand node of each `(age, slice)`.
pub fn write_cash_policy<W: Write>(model: &Model, policy: &CashPolicy, out: W) -> Result<(), LifecycleError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = KEY_COLUMNS.to_vec();
    header.extend(["cash", "savings", "consumption", "value"]);
    w.write_record(&header).map_err(csv_err)?;
    for j in 0..model.periods() {
        for s in 0..model.layout.slices() {
            let (xs, ys) = policy.nodes(j, s);
            for (&x, &a) in xs.iter().zip(ys) {
                let mut row = key_cells(model, j, s, None);
                row.extend([
                    format!("{x:e}"),
                    format!("{a:e}"),
                    format!("{:e}", x - a),
                    format!("{:e}", policy.value_at(model, j, s, x)),
                ]);
                w.write_record(&row).map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
