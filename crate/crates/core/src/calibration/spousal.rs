use serde::{Deserialize, Serialize};

use super::tables::{named_values, EMBEDDED_SPOUSAL_INCOME};
use super::CalibrationError;

/// Log spousal income regression on the head's characteristics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpousalIncomeCoeffs {
    pub constant: f64,
    pub log_head_income: f64,
    /// Coefficients on age, age squared and age cubed (age in years).
    pub age: [f64; 3],
    pub college: f64,
    /// Coefficients on the indicators `k = 1..=4`.
    pub children: [f64; 4],
    /// Intercept shift at or after retirement.
    pub retired: f64,
    /// Slope on the number of children at or after retirement.
    pub retired_x_children: f64,
    /// Residual variance of log spousal income. Not reported with the
    /// regression; the shipped value is a stand-in.
    pub residual_variance: f64,
}

impl SpousalIncomeCoeffs {
    pub fn from_csv(text: &str) -> Result<Self, CalibrationError> {
        let v = named_values(text)?;
        let c = Self {
            constant: v.get("constant")?,
            log_head_income: v.get("log_head_income")?,
            age: [v.get("age")?, v.get("age_sq")?, v.get("age_cu")?],
            college: v.get("college")?,
            children: [v.get("k1")?, v.get("k2")?, v.get("k3")?, v.get("k4")?],
            retired: v.get("retired")?,
            retired_x_children: v.get("retired_x_children")?,
            residual_variance: v.get("residual_variance")?,
        };
        if !(c.residual_variance > 0.0) {
            return Err(CalibrationError::Invalid("residual variance must be positive".into()));
        }
        Ok(c)
    }
}

impl Default for SpousalIncomeCoeffs {
    fn default() -> Self {
        Self::from_csv(EMBEDDED_SPOUSAL_INCOME).expect("embedded spousal-income table is valid")
    }
}

/// Mean and variance of log spousal income. Year effects are folded into the constant.
pub fn spousal_income(
    coeffs: &SpousalIncomeCoeffs,
    head_income: f64,
    age: f64,
    college: bool,
    k: usize,
    retired: bool,
) -> Result<(f64, f64), CalibrationError> {
    if !(head_income > 0.0) {
        return Err(CalibrationError::Domain(format!("head income {head_income}")));
    }
    let mut m = coeffs.constant
        + coeffs.log_head_income * head_income.ln()
        + coeffs.age[0] * age
        + coeffs.age[1] * age * age
        + coeffs.age[2] * age * age * age;
    if college {
        m += coeffs.college;
    }
    if k > 0 {
        m += coeffs.children[k.min(4) - 1];
    }
    if retired {
        m += coeffs.retired + coeffs.retired_x_children * k as f64;
    }
    Ok((m, coeffs.residual_variance))
}
