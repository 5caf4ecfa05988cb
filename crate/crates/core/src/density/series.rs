use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bigfmt;
use super::local::{chi_p, DepthPolicy, LocalDensity};
use crate::error::{Error, Result};
use crate::primes::primes_up_to;
use crate::system::{check_highly_nonsingular, derive_profile, AdditiveSystem, CheckMode};

pub const DEFAULT_PRIME_BOUND: u64 = 97;
/// Primes below this are left out of the tail fit.
const TAIL_FIT_FROM: u64 = 5;

/// Heuristic size of the primes beyond the bound, from `|chi_p - 1| <= c p^{-e}`
/// fitted on the computed primes. A labelled guess, not a bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailNote {
    pub c: f64,
    pub exponent: f64,
    /// `sum_{p > bound} c p^{-exponent}`, estimated with the prime number theorem
    pub magnitude: f64,
    pub primes_fitted: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub prime_bound: u64,
    pub policy: DepthPolicy,
    pub local: Vec<LocalDensity>,
    /// exact product of the recorded `chi_p`
    #[serde(with = "bigfmt::rat")]
    pub product: BigRational,
    pub product_decimal: String,
    pub product_f64: f64,
    pub provisional: bool,
    pub tail_note: TailNote,
    /// relative truncation error of the unstabilized factors
    pub truncation_error: f64,
    pub caveats: Vec<String>,
}

impl SeriesReport {
    pub fn has_zero_factor(&self) -> bool {
        self.product.is_zero()
    }

    /// Relative error budget of the partial product (truncation plus tail).
    pub fn relative_error(&self) -> f64 {
        let tail = if self.tail_note.magnitude.is_finite() {
            self.tail_note.magnitude
        } else {
            0.0
        };
        self.truncation_error + tail
    }
}

fn tail_note(local: &[LocalDensity], bound: u64) -> TailNote {
    let pts: Vec<(f64, f64)> = local
        .iter()
        .filter(|d| d.p >= TAIL_FIT_FROM)
        .filter_map(|d| {
            let dev = (d.chi_f64() - 1.0).abs();
            (dev > 0.0).then(|| ((d.p as f64).ln(), dev.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return TailNote {
            c: 0.0,
            exponent: f64::INFINITY,
            magnitude: 0.0,
            primes_fitted: pts.len(),
        };
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = if sxx > 0.0 { -sxy / sxx } else { 1.0 };
    // smallest c with |chi_p - 1| <= c p^{-exponent} on every fitted prime
    let c = pts.iter().map(|p| (p.1 + exponent * p.0).exp()).fold(0.0, f64::max);
    let magnitude = if exponent > 1.0 {
        // sum_{p > x} p^{-e} ~ x^{1-e} / ((e - 1) ln x)
        let x = bound.max(2) as f64;
        c * x.powf(1.0 - exponent) / ((exponent - 1.0) * x.ln())
    } else {
        f64::INFINITY
    };
    TailNote {
        c,
        exponent,
        magnitude,
        primes_fitted: pts.len(),
    }
}

/// `prod_{p <= prime_bound} chi_p` with every factor exact at its depth.
pub fn singular_series(sys: &AdditiveSystem, prime_bound: u64, policy: &DepthPolicy) -> Result<SeriesReport> {
    if prime_bound < 2 {
        return Err(Error::invalid("prime bound must be at least 2"));
    }
    let mut caveats = Vec::new();
    let prof = derive_profile(sys);
    let ns = check_highly_nonsingular(sys, &prof, CheckMode::default())?;
    if !ns.holds {
        let msg = "system is not highly non-singular; convergence of the series is not guaranteed".to_string();
        log::warn!("{msg}");
        caveats.push(msg);
    }
    let primes = primes_up_to(prime_bound);
    let local: Vec<LocalDensity> = primes
        .par_iter()
        .map(|&p| chi_p(sys, p, policy))
        .collect::<Result<_>>()?;
    let product = local.iter().fold(BigRational::one(), |acc, d| acc * d.chi());
    let provisional = local.iter().any(|d| !d.stabilized);
    if provisional {
        let open: Vec<String> = local.iter().filter(|d| !d.stabilized).map(|d| d.p.to_string()).collect();
        caveats.push(format!("unstabilized factors at p = {}", open.join(", ")));
    }
    let truncation_error = local
        .iter()
        .map(|d| {
            let chi = d.chi_f64().abs();
            if chi > 0.0 {
                d.truncation_estimate() / chi
            } else {
                0.0
            }
        })
        .sum();
    let tail = tail_note(&local, prime_bound);
    Ok(SeriesReport {
        prime_bound,
        policy: *policy,
        product_decimal: bigfmt::rat_to_decimal(&product, 30),
        product_f64: product.to_f64().unwrap_or(f64::NAN),
        product,
        provisional,
        tail_note: tail,
        truncation_error,
        local,
        caveats,
    })
}
