//! Upper bounds from caps and replicas of the enacted transfer rules, all in
//! dollars per household.

use super::config::{Eligibility, Scenario};
use crate::inputs::GroupDefinition;

/// Household composition and pre-crisis income and tax of a group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Household {
    pub adults: usize,
    pub children: usize,
    pub income: f64,
    pub tax: f64,
}

impl Household {
    pub fn of(def: &GroupDefinition, income: f64, tax: f64) -> Option<Self> {
        Some(Self { adults: def.adults()?, children: def.k?, income, tax })
    }

    fn members(&self) -> f64 {
        (self.adults + self.children) as f64
    }
}

/// Largest transfer the caps allow.
pub fn upper_dollars(h: &Household, cap_adult: f64, cap_child: f64, eligibility: Eligibility) -> f64 {
    let adults = h.adults as f64;
    let adult_part = match eligibility {
        Eligibility::Unconstrained => cap_adult * adults,
        Eligibility::Replica => h.tax.max(300.0 * adults).min(cap_adult * adults),
    };
    adult_part + cap_child * h.children as f64
}

/// Transfer under the enacted rule of each crisis.
///
/// 2008: the tax liability floored at $300 and capped at $600 per adult,
/// plus $300 per child, reduced by 5% of income above $75,000 (single) or
/// $150,000 (married). 2021: $1,400 per person, phased out linearly between
/// $75,000 and $80,000 (single) or $150,000 and $160,000 (married).
pub fn replica_dollars(scenario: Scenario, h: &Household) -> f64 {
    let adults = h.adults as f64;
    let married = h.adults > 1;
    match scenario {
        Scenario::Stimulus2008 => {
            let base = h.tax.max(300.0 * adults).min(600.0 * adults) + 300.0 * h.children as f64;
            let threshold = if married { 150_000.0 } else { 75_000.0 };
            (base - 0.05 * (h.income - threshold).max(0.0)).max(0.0)
        }
        Scenario::Welfare2021 => {
            let (lo, hi) = if married { (150_000.0, 160_000.0) } else { (75_000.0, 80_000.0) };
            let share = ((hi - h.income) / (hi - lo)).clamp(0.0, 1.0);
            1400.0 * h.members() * share
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hh(adults: usize, children: usize, income: f64, tax: f64) -> Household {
        Household { adults, children, income, tax }
    }

    #[test]
    fn rebate_2008_rule() {
        assert_eq!(replica_dollars(Scenario::Stimulus2008, &hh(1, 0, 10_000.0, 50.0)), 300.0);
        assert_eq!(replica_dollars(Scenario::Stimulus2008, &hh(2, 2, 60_000.0, 5_000.0)), 1800.0);
        assert_eq!(replica_dollars(Scenario::Stimulus2008, &hh(1, 0, 85_000.0, 9_000.0)), 100.0);
        assert_eq!(replica_dollars(Scenario::Stimulus2008, &hh(1, 0, 200_000.0, 40_000.0)), 0.0);
    }

    #[test]
    fn checks_2021_rule() {
        assert_eq!(replica_dollars(Scenario::Welfare2021, &hh(2, 2, 100_000.0, 0.0)), 5600.0);
        assert_eq!(replica_dollars(Scenario::Welfare2021, &hh(1, 0, 77_500.0, 0.0)), 700.0);
        assert_eq!(replica_dollars(Scenario::Welfare2021, &hh(2, 0, 160_000.0, 0.0)), 0.0);
    }

    #[test]
    fn bounds() {
        let h = hh(2, 1, 40_000.0, 700.0);
        assert_eq!(upper_dollars(&h, 900.0, 600.0, Eligibility::Unconstrained), 2400.0);
        assert_eq!(upper_dollars(&h, 900.0, 600.0, Eligibility::Replica), 1300.0);
        assert!(upper_dollars(&h, 600.0, 300.0, Eligibility::Replica) >= replica_dollars(Scenario::Stimulus2008, &h));
    }
}
