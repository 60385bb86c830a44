use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::CalibrationError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovChain {
    pub states: Vec<f64>,
    /// Row-major: `transition[i][j] = P(next = j | current = i)`.
    pub transition: Vec<Vec<f64>>,
    pub stationary: Vec<f64>,
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Discretizes `x' = rho x + e`, `e ~ N(0, sigma^2)` on `n` evenly spaced
/// points spanning `span` unconditional standard deviations either side of 0.
pub fn tauchen(rho: f64, sigma: f64, n: usize, span: f64) -> Result<MarkovChain, CalibrationError> {
    if !(rho.abs() < 1.0) {
        return Err(CalibrationError::Persistence(rho));
    }
    if n < 2 {
        return Err(CalibrationError::Invalid(format!("need at least 2 states, got {n}")));
    }
    if !(sigma > 0.0 && span > 0.0) {
        return Err(CalibrationError::Invalid("sigma and span must be positive".into()));
    }
    let sd = sigma / (1.0 - rho * rho).sqrt();
    let top = span * sd;
    let step = 2.0 * top / (n - 1) as f64;
    let states: Vec<f64> = (0..n).map(|i| -top + step * i as f64).collect();
    let transition = states
        .iter()
        .map(|&z| {
            let mean = rho * z;
            let mut row: Vec<f64> = (0..n)
                .map(|j| {
                    let hi = (states[j] + step / 2.0 - mean) / sigma;
                    let lo = (states[j] - step / 2.0 - mean) / sigma;
                    if j == 0 {
                        normal_cdf(hi)
                    } else if j == n - 1 {
                        normal_cdf(-lo)
                    } else {
                        normal_cdf(hi) - normal_cdf(lo)
                    }
                })
                .collect();
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
            row
        })
        .collect();
    MarkovChain::new(states, transition)
}

impl MarkovChain {
    pub fn new(states: Vec<f64>, transition: Vec<Vec<f64>>) -> Result<Self, CalibrationError> {
        let n = states.len();
        if transition.len() != n || transition.iter().any(|r| r.len() != n) {
            return Err(CalibrationError::Invalid("transition matrix shape".into()));
        }
        for row in &transition {
            if row.iter().any(|p| !(*p >= 0.0)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(CalibrationError::Invalid("rows must be probability vectors".into()));
            }
        }
        let stationary = stationary_distribution(&transition);
        Ok(Self { states, transition, stationary })
    }

    /// Chain whose draws are independent across periods.
    pub fn iid(states: Vec<f64>, probabilities: Vec<f64>) -> Result<Self, CalibrationError> {
        let rows = vec![probabilities; states.len()];
        Self::new(states, rows)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn stationary_mean(&self) -> f64 {
        self.states.iter().zip(&self.stationary).map(|(x, p)| x * p).sum()
    }

    pub fn stationary_variance(&self) -> f64 {
        let m = self.stationary_mean();
        self.states.iter().zip(&self.stationary).map(|(x, p)| p * (x - m).powi(2)).sum()
    }

    /// Next state index for a uniform draw `u` in `[0, 1)`.
    pub fn step(&self, from: usize, u: f64) -> usize {
        let mut acc = 0.0;
        for (j, p) in self.transition[from].iter().enumerate() {
            acc += p;
            if u < acc {
                return j;
            }
        }
        self.len() - 1
    }
}

/// Power iteration from the uniform distribution until the L1 change is below 1e-12.
fn stationary_distribution(transition: &[Vec<f64>]) -> Vec<f64> {
    let n = transition.len();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..1_000_000 {
        let mut next = vec![0.0; n];
        for (i, row) in transition.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                next[j] += pi[i] * p;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|p| *p /= total);
        let change: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if change < 1e-12 {
            break;
        }
    }
    pi
}
