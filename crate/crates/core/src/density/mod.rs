//! Local densities `chi_p`, the truncated singular series, the real density
//! `chi_inf` and the predicted leading constant.

pub mod bigfmt;
mod count;
mod local;
mod real;
mod series;

pub use count::{count_mod, count_mod_naive, mod_counts, mod_cost, ModCounts, DEFAULT_MOD_BUDGET, MAX_RESIDUE_CELLS};
pub use local::{chi_p, hensel_witness, DepthPolicy, LocalDensity};
pub use real::{chi_inf, ChiInfEstimate, ChiInfMethod};
pub use series::{singular_series, SeriesReport, TailNote, DEFAULT_PRIME_BOUND};

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictedConstant {
    #[serde(rename = "C")]
    pub c: f64,
    pub error: f64,
    pub relative_error: f64,
    pub chi_inf: f64,
    pub series: f64,
    /// an exactly zero factor forces `C = 0`
    pub zero_factor: bool,
    pub provisional: bool,
}

/// `C = chi_inf * prod_p chi_p`; relative errors of the two factors add.
pub fn predicted_constant(chi_inf: &ChiInfEstimate, series: &SeriesReport) -> PredictedConstant {
    let zero_factor = series.has_zero_factor() || chi_inf.value == 0.0;
    if zero_factor {
        return PredictedConstant {
            c: 0.0,
            error: 0.0,
            relative_error: 0.0,
            chi_inf: chi_inf.value,
            series: series.product_f64,
            zero_factor,
            provisional: series.provisional,
        };
    }
    let c = chi_inf.value * series.product_f64;
    let relative_error = chi_inf.error() / chi_inf.value.abs() + series.relative_error();
    PredictedConstant {
        c,
        error: relative_error * c.abs(),
        relative_error,
        chi_inf: chi_inf.value,
        series: series.product_f64,
        zero_factor,
        provisional: series.provisional || chi_inf.unstable,
    }
}

/// Everything the densities stage produces for one system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub chi_inf: ChiInfEstimate,
    pub series: SeriesReport,
    pub constant: PredictedConstant,
    /// real and p-adic non-singular solutions found
    pub positivity: PositivityFlags,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositivityFlags {
    pub real_solution_seen: bool,
    /// primes where no non-singular solution mod p was found
    pub primes_without_witness: Vec<u64>,
}

pub fn density_report(
    sys: &crate::system::AdditiveSystem,
    prime_bound: u64,
    policy: &DepthPolicy,
    method: &ChiInfMethod,
) -> crate::Result<DensityReport> {
    let series = singular_series(sys, prime_bound, policy)?;
    let chi = chi_inf(sys, method)?;
    let constant = predicted_constant(&chi, &series);
    let positivity = PositivityFlags {
        real_solution_seen: chi.real_witness,
        primes_without_witness: series.local.iter().filter(|d| !d.hensel_certified).map(|d| d.p).collect(),
    };
    Ok(DensityReport {
        chi_inf: chi,
        series,
        constant,
        positivity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::parse_system;

    #[test]
    fn linear_constant_is_one() {
        let sys = parse_system("1: 1 -1").unwrap();
        let rep = density_report(&sys, 13, &DepthPolicy::default(), &ChiInfMethod::volume(1_000_000, 4)).unwrap();
        assert!((rep.constant.c - 1.0).abs() < 0.02, "{:?}", rep.constant);
        assert!(rep.positivity.primes_without_witness.is_empty());
    }

    #[test]
    fn zero_factor_absorbs() {
        let sys = parse_system("1: 1 -1").unwrap();
        let mut series = singular_series(&sys, 5, &DepthPolicy::default()).unwrap();
        series.product = num_rational::BigRational::from_integer(0.into());
        let chi = chi_inf(&sys, &ChiInfMethod::volume(10_000, 0)).unwrap();
        let c = predicted_constant(&chi, &series);
        assert_eq!(c.c, 0.0);
        assert!(c.zero_factor);
    }
}
