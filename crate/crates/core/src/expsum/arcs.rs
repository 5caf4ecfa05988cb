use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::phase::{f_eval, gamma_transform};
use crate::counting::{enumerate_range, RangeSpec};
use crate::error::{Error, Result};
use crate::system::{derive_profile, AdditiveSystem};

/// Rejection attempts allowed per requested minor-arc sample.
const MAX_TRIES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcParams {
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "P")]
    pub p: f64,
    /// Weyl exponent used by the diagnostics; `None` means `1/(8k)`.
    pub sigma: Option<f64>,
}

impl ArcParams {
    pub fn new(x: f64, q: f64, p: f64) -> Result<Self> {
        let a = ArcParams { x, q, p, sigma: None };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1.0 <= self.x && self.x <= self.q && self.q <= self.p) {
            return Err(Error::invalid(format!(
                "arc parameters need 1 <= X <= Q <= P, got X={} Q={} P={}",
                self.x, self.q, self.p
            )));
        }
        Ok(())
    }

    pub fn sigma_for(&self, k: u32) -> f64 {
        self.sigma.unwrap_or(1.0 / (8.0 * k as f64))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcStyle {
    /// `|q alpha_i - a_i| <= X P^{-d_i}`
    M,
    /// `|alpha_i - a_i / q| <= X P^{-d_i}`
    N,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "arc", rename_all = "lowercase")]
pub enum ArcClass {
    Major { q: u64, a: Vec<i64> },
    Minor,
}

fn fits(alpha: &[f64], degrees: &[u32], q: u64, params: &ArcParams, style: ArcStyle) -> Option<Vec<i64>> {
    let qf = q as f64;
    alpha
        .iter()
        .zip(degrees)
        .map(|(&al, &d)| {
            let a = (qf * al).round();
            let width = params.x * params.p.powi(-(d as i32));
            let dev = match style {
                ArcStyle::M => (qf * al - a).abs(),
                ArcStyle::N => (al - a / qf).abs(),
            };
            (dev <= width).then_some(a as i64)
        })
        .collect()
}

/// Denominators of the convergents and semiconvergents of `x` up to `limit`.
fn cf_denominators(x: f64, limit: u64) -> Vec<u64> {
    let mut out = vec![1];
    let (mut q_prev, mut q) = (0u64, 1u64);
    let mut rest = x - x.floor();
    for _ in 0..64 {
        if rest.abs() < 1e-15 {
            break;
        }
        let inv = 1.0 / rest;
        let a = inv.floor();
        rest = inv - a;
        let a = a as u64;
        for step in 1..=a {
            let d = step.saturating_mul(q).saturating_add(q_prev);
            if d > limit {
                break;
            }
            out.push(d);
        }
        let next = a.saturating_mul(q).saturating_add(q_prev);
        if next > limit {
            break;
        }
        q_prev = q;
        q = next;
    }
    out
}

/// Least `q <= X` such that `alpha` lies in the major arc around `a/q`.
///
/// Candidates come from the continued fractions of each coordinate and are
/// checked jointly; every smaller `q` is then checked directly, so the result
/// is always the least admissible modulus.
pub fn classify_arc(alpha: &[f64], params: &ArcParams, degrees: &[u32], style: ArcStyle) -> Result<ArcClass> {
    if alpha.len() != degrees.len() {
        return Err(Error::invalid("one coordinate per degree"));
    }
    params.validate()?;
    let q_max = params.x.floor() as u64;
    let mut candidates: Vec<u64> = alpha.iter().flat_map(|&a| cf_denominators(a, q_max)).collect();
    candidates.sort_unstable();
    candidates.dedup();
    let bound = candidates
        .iter()
        .find(|&&q| fits(alpha, degrees, q, params, style).is_some())
        .copied()
        .unwrap_or(q_max);
    for q in 1..=bound {
        if let Some(a) = fits(alpha, degrees, q, params, style) {
            return Ok(ArcClass::Major { q, a });
        }
    }
    Ok(ArcClass::Minor)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylSample {
    pub alpha: Vec<f64>,
    /// `|f_j(alpha)|` sorted in decreasing order
    pub moduli: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylReport {
    pub params: ArcParams,
    pub style: ArcStyle,
    pub samples: usize,
    pub seed: u64,
    /// size of the tuples the minimum is taken over
    #[serde(rename = "M")]
    pub m: usize,
    pub sigma: f64,
    /// max over samples of `(M-th largest |f_j|) X^sigma / P`
    pub weyl_max: Option<f64>,
    /// max over samples of `min_j |f_j| Q^{1/3} / P^{1 + eps}`, quadratic plus cubic systems only
    pub qc_max: Option<f64>,
    pub epsilon: f64,
    pub rejected: usize,
    pub points: Vec<WeylSample>,
}

/// Samples minor-arc points and records how small the exponential sums get.
/// Purely observational: nothing here is asserted.
pub fn weyl_diagnostic(
    sys: &AdditiveSystem,
    params: &ArcParams,
    style: ArcStyle,
    sample_count: usize,
    seed: u64,
    epsilon: f64,
) -> Result<WeylReport> {
    params.validate()?;
    let prof = derive_profile(sys);
    let sigma = params.sigma_for(prof.k);
    let xs = enumerate_range(&RangeSpec::full(params.p.floor().max(1.0) as u64))?;
    let degrees = sys.degrees().to_vec();
    let draws: Vec<(Option<WeylSample>, usize)> = (0..sample_count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut rejected = 0;
            for _ in 0..MAX_TRIES {
                let alpha: Vec<f64> = (0..sys.r()).map(|_| rng.gen::<f64>()).collect();
                if classify_arc(&alpha, params, &degrees, style)? != ArcClass::Minor {
                    rejected += 1;
                    continue;
                }
                let g = gamma_transform(sys, &alpha)?;
                let mut moduli = g
                    .gamma
                    .iter()
                    .map(|gj| Ok(f_eval(gj, &g.exponents, &xs)?.norm()))
                    .collect::<Result<Vec<f64>>>()?;
                moduli.sort_by(|a, b| b.total_cmp(a));
                return Ok((Some(WeylSample { alpha, moduli }), rejected));
            }
            Ok((None, rejected))
        })
        .collect::<Result<_>>()?;
    let rejected = draws.iter().map(|d| d.1).sum();
    let points: Vec<WeylSample> = draws.into_iter().filter_map(|d| d.0).collect();
    let m = prof.m.min(sys.s());
    let weyl_max = points
        .iter()
        .map(|pt| pt.moduli[m - 1] * params.x.powf(sigma) / params.p)
        .reduce(f64::max);
    let mut ks = prof.exponents();
    ks.sort_unstable();
    let qc_max = if ks == [2, 3] {
        points
            .iter()
            .map(|pt| pt.moduli.last().copied().unwrap_or(0.0) * params.q.powf(1.0 / 3.0) / params.p.powf(1.0 + epsilon))
            .reduce(f64::max)
    } else {
        None
    };
    Ok(WeylReport {
        params: *params,
        style,
        samples: points.len(),
        seed,
        m,
        sigma,
        weyl_max,
        qc_max,
        epsilon,
        rejected,
        points,
    })
}
