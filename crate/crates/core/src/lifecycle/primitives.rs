//! Period utility, the income tax schedule, and the welfare transform.

use super::LifecycleError;

/// Household members: head, spouse if married, and children.
pub fn household_size(married: bool, k: usize) -> f64 {
    1.0 + married as u8 as f64 + k as f64
}

/// `kappa * (c / sqrt(HH))^(1 - gamma) / (1 - gamma)`.
pub fn utility(c: f64, married: bool, k: usize, gamma: f64, kappa: f64) -> Result<f64, LifecycleError> {
    if !(c > 0.0) {
        return Err(LifecycleError::Domain(format!("consumption {c} must be positive")));
    }
    Ok(crra(c / household_size(married, k).sqrt(), gamma, kappa))
}

#[inline]
pub(crate) fn crra(c: f64, gamma: f64, kappa: f64) -> f64 {
    if gamma == 2.0 {
        -kappa / c
    } else {
        kappa * c.powf(1.0 - gamma) / (1.0 - gamma)
    }
}

/// Income tax `a0 * (y - (y^-a1 + a2)^(-1/a1))`, zero at `y = 0`.
pub fn tax(y: f64, a0: f64, a1: f64, a2: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    // y - (y^-a1 + a2)^(-1/a1) = y * (1 - (1 + a2 y^a1)^(-1/a1))
    let inner = a2 * y.powf(a1);
    a0 * y * -(-(inner.ln_1p()) / a1).exp_m1()
}

/// Life-span adjusted consumption equivalent `[V (1 - gamma)]^(1 / (1 - gamma))`.
pub fn welfare_equivalent(v: f64, gamma: f64) -> Result<f64, LifecycleError> {
    if gamma == 1.0 {
        return Err(LifecycleError::Config("the welfare transform needs gamma != 1".into()));
    }
    let base = v * (1.0 - gamma);
    if !(base > 0.0) || !base.is_finite() {
        return Err(LifecycleError::Domain(format!("V (1 - gamma) = {base} must be positive")));
    }
    Ok(if gamma == 2.0 { 1.0 / base } else { base.powf(1.0 / (1.0 - gamma)) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn utility_examples() {
        assert_eq!(utility(1.0, false, 0, 2.0, 1.0).unwrap(), -1.0);
        assert_eq!(utility(4.0, true, 2, 2.0, 1.0).unwrap(), -0.5);
        assert!((utility(4.0, true, 2, 2.0, 0.669).unwrap() + 0.3345).abs() < 1e-15);
        assert!(utility(0.0, false, 0, 2.0, 1.0).is_err());
        // General branch agrees with the gamma = 2 shortcut.
        assert!((crra(1.7, 2.0 + 1e-12, 1.0) - crra(1.7, 2.0, 1.0)).abs() < 1e-9);
    }

    #[test]
    fn tax_examples() {
        assert_eq!(tax(3.0, 0.258, 0.768, 0.0), 0.0);
        // 40-digit reference for y = 1, a2 = 0.5.
        assert!((tax(1.0, 0.258, 0.768, 0.5) - 0.105_828_187_876_758_877_5).abs() < 1e-15);
        let big = 1e12;
        assert!((tax(big, 0.258, 0.768, 0.5) / big - 0.258).abs() < 1e-9);
        assert_eq!(tax(0.0, 0.258, 0.768, 0.5), 0.0);
    }

    #[test]
    fn welfare_examples() {
        assert_eq!(welfare_equivalent(-1.0, 2.0).unwrap(), 1.0);
        assert_eq!(welfare_equivalent(-0.5, 2.0).unwrap(), 2.0);
        assert!(welfare_equivalent(1.0, 2.0).is_err());
        assert!(welfare_equivalent(-1.0, 1.0).is_err());
        assert!((welfare_equivalent(4.0, 0.5).unwrap() - 4.0).abs() < 1e-12);
    }
}
