use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primes::largest_prime_factor_table;

/// Largest `P` any range may be enumerated for.
pub const DEFAULT_RANGE_BUDGET: u64 = 50_000_000;

/// Default smoothness exponent. It is a heuristic choice: the theory only asks
/// for a "sufficiently small" exponent.
pub const DEFAULT_ETA: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeKind {
    /// `[1, P]`
    Full,
    /// `R`-smooth integers in `[1, P]` with `R = P^eta`
    Smooth,
    /// `(P/2, P]`
    Dyadic,
}

impl std::str::FromStr for RangeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(RangeKind::Full),
            "smooth" => Ok(RangeKind::Smooth),
            "dyadic" => Ok(RangeKind::Dyadic),
            other => Err(Error::invalid(format!("unknown range kind '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeSpec {
    pub kind: RangeKind,
    #[serde(rename = "P")]
    pub p: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

impl RangeSpec {
    pub fn full(p: u64) -> Self {
        RangeSpec {
            kind: RangeKind::Full,
            p,
            eta: None,
        }
    }

    pub fn smooth(p: u64, eta: f64) -> Self {
        RangeSpec {
            kind: RangeKind::Smooth,
            p,
            eta: Some(eta),
        }
    }

    pub fn dyadic(p: u64) -> Self {
        RangeSpec {
            kind: RangeKind::Dyadic,
            p,
            eta: None,
        }
    }

    pub fn with_p(&self, p: u64) -> Self {
        RangeSpec { p, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::invalid("P must be at least 1"));
        }
        if self.kind == RangeKind::Smooth {
            match self.eta {
                Some(eta) if eta > 0.0 && eta <= 1.0 => {}
                Some(eta) => {
                    return Err(Error::invalid(format!("eta must lie in (0, 1], got {eta}")))
                }
                None => return Err(Error::invalid("smooth range needs eta")),
            }
        }
        Ok(())
    }

    /// `R = P^eta`, rounded down (values within 1e-9 of an integer snap to it).
    pub fn smoothness_bound(&self) -> Option<u64> {
        let eta = self.eta?;
        let x = (self.p as f64).powf(eta);
        let near = x.round();
        let r = if (x - near).abs() <= 1e-9 * x.max(1.0) {
            near
        } else {
            x.floor()
        };
        Some(r.max(1.0) as u64)
    }

    pub fn label(&self) -> String {
        match self.kind {
            RangeKind::Full => format!("full[1,{}]", self.p),
            RangeKind::Dyadic => format!("dyadic({},{}]", self.p / 2, self.p),
            RangeKind::Smooth => format!(
                "smooth(P={},R={})",
                self.p,
                self.smoothness_bound().unwrap_or(0)
            ),
        }
    }
}

/// The elements of a range in increasing order.
pub fn enumerate_range(range: &RangeSpec) -> Result<Vec<u64>> {
    enumerate_range_with_budget(range, DEFAULT_RANGE_BUDGET)
}

pub fn enumerate_range_with_budget(range: &RangeSpec, budget: u64) -> Result<Vec<u64>> {
    range.validate()?;
    if range.p > budget {
        return Err(Error::budget("range enumeration", range.p as u128, budget as u128));
    }
    let p = range.p;
    Ok(match range.kind {
        RangeKind::Full => (1..=p).collect(),
        RangeKind::Dyadic => (p / 2 + 1..=p).collect(),
        RangeKind::Smooth => {
            let r = range.smoothness_bound().expect("validated") as u32;
            let lpf = largest_prime_factor_table(p as usize);
            (1..=p).filter(|&n| lpf[n as usize] <= r).collect()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_and_dyadic() {
        assert_eq!(enumerate_range(&RangeSpec::full(5)).unwrap(), vec![1, 2, 3, 4, 5]);
        assert_eq!(enumerate_range(&RangeSpec::dyadic(9)).unwrap(), vec![5, 6, 7, 8, 9]);
        assert_eq!(enumerate_range(&RangeSpec::dyadic(1)).unwrap(), vec![1]);
    }

    #[test]
    fn two_smooth_up_to_ten() {
        // R = 10^eta = 2
        let r = RangeSpec::smooth(10, 2f64.ln() / 10f64.ln());
        assert_eq!(r.smoothness_bound(), Some(2));
        assert_eq!(enumerate_range(&r).unwrap(), vec![1, 2, 4, 8]);
    }

    #[test]
    fn smooth_matches_trial_division() {
        let range = RangeSpec::smooth(2000, 0.5);
        let bound = range.smoothness_bound().unwrap();
        assert_eq!(bound, 44);
        let naive: Vec<u64> = (1..=2000u64)
            .filter(|&n| {
                let mut m = n;
                let mut d = 2;
                let mut largest = 1;
                while d * d <= m {
                    while m % d == 0 {
                        largest = d;
                        m /= d;
                    }
                    d += 1;
                }
                if m > 1 {
                    largest = m;
                }
                largest <= bound
            })
            .collect();
        assert_eq!(enumerate_range(&range).unwrap(), naive);
    }

    #[test]
    fn validation() {
        assert!(enumerate_range(&RangeSpec::full(0)).is_err());
        assert!(enumerate_range(&RangeSpec::smooth(10, 0.0)).is_err());
        assert!(enumerate_range(&RangeSpec::smooth(10, 1.5)).is_err());
        assert!(matches!(
            enumerate_range_with_budget(&RangeSpec::full(100), 10),
            Err(Error::Budget { .. })
        ));
    }

    #[test]
    fn exact_power_bounds_snap() {
        assert_eq!(RangeSpec::smooth(1_000_000, 0.5).smoothness_bound(), Some(1000));
        assert_eq!(RangeSpec::smooth(64, 0.5).smoothness_bound(), Some(8));
    }
}
