use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dickman::dickman_rho;
use super::phase::e;
use crate::error::{Error, Result};

/// Relative accuracy target of the oscillatory quadrature.
pub const DEFAULT_QUAD_TOL: f64 = 1e-8;
const MAX_DEPTH: u32 = 40;
/// Largest phase change, in cycles, allowed across one pre-split piece.
const CYCLES_PER_PIECE: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub re: f64,
    pub im: f64,
    pub error_estimate: f64,
    pub pieces: usize,
}

impl QuadResult {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

struct Integrand<'a> {
    beta: &'a [f64],
    k_vec: &'a [u32],
    /// `ln R` when the Dickman weight is on
    log_r: Option<f64>,
}

impl Integrand<'_> {
    fn eval(&self, z: f64) -> Complex64 {
        let phase: f64 = self.beta.iter().zip(self.k_vec).map(|(b, &k)| b * z.powi(k as i32)).sum();
        let w = match self.log_r {
            Some(lr) if z > 0.0 => dickman_rho(z.ln() / lr),
            _ => 1.0,
        };
        e(phase) * w
    }

    /// Bound on `|phase'(z)|` over `[0, z]`.
    fn slope(&self, z: f64) -> f64 {
        self.beta
            .iter()
            .zip(self.k_vec)
            .map(|(b, &k)| b.abs() * k as f64 * z.abs().powi(k as i32 - 1))
            .sum()
    }
}

fn simpson(f: &Integrand, a: f64, fa: Complex64, b: f64, fb: Complex64) -> (f64, Complex64, Complex64) {
    let m = 0.5 * (a + b);
    let fm = f.eval(m);
    (m, fm, (fa + fm * 4.0 + fb) * ((b - a) / 6.0))
}

#[allow(clippy::too_many_arguments)]
fn adapt(
    f: &Integrand,
    a: f64,
    fa: Complex64,
    b: f64,
    fb: Complex64,
    m: f64,
    fm: Complex64,
    whole: Complex64,
    tol: f64,
    depth: u32,
) -> (Complex64, f64) {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let split = left + right;
    let diff = (split - whole).norm();
    if depth == 0 || diff <= 15.0 * tol {
        // Richardson step removes the leading error term
        return (split + (split - whole) / 15.0, diff / 15.0);
    }
    let (l, el) = adapt(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1);
    let (r, er) = adapt(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1);
    (l + r, el + er)
}

/// `int_a^b w(z) e(beta_1 z^{k_1} + ...) dz`, with `w(z) = rho(ln z / ln R)`
/// when `smooth_r = Some(R)` and `w = 1` otherwise.
pub fn oscillatory_integral(
    beta: &[f64],
    k_vec: &[u32],
    a: f64,
    b: f64,
    smooth_r: Option<f64>,
    rel_tol: f64,
) -> Result<QuadResult> {
    if beta.len() != k_vec.len() {
        return Err(Error::invalid("one offset per exponent"));
    }
    if !(a.is_finite() && b.is_finite()) || b < a || a < 0.0 {
        return Err(Error::invalid(format!("bad integration range [{a}, {b}]")));
    }
    if let Some(r) = smooth_r {
        if !(r >= 2.0) {
            return Err(Error::invalid("the Dickman weight needs R >= 2"));
        }
    }
    let f = Integrand {
        beta,
        k_vec,
        log_r: smooth_r.map(f64::ln),
    };
    // breakpoints: the weight has kinks at powers of R
    let mut breaks = vec![a];
    if let Some(r) = smooth_r {
        let mut z = r;
        while z < b {
            if z > a {
                breaks.push(z);
            }
            z *= r;
        }
    }
    breaks.push(b);
    let abs_tol = rel_tol * (b - a).max(1e-300);
    let mut pieces = Vec::new();
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mut z = lo;
        while z < hi {
            let mut h = (hi - lo) / 4.0;
            for _ in 0..3 {
                let s = f.slope((z + h).min(hi));
                if s > 0.0 {
                    h = h.min(CYCLES_PER_PIECE / s);
                }
            }
            let next = if h <= 0.0 || z + h >= hi { hi } else { z + h };
            pieces.push((z, next));
            z = next;
        }
    }
    let parts: Vec<(Complex64, f64)> = pieces
        .par_iter()
        .map(|&(lo, hi)| {
            let (fa, fb) = (f.eval(lo), f.eval(hi));
            let (m, fm, whole) = simpson(&f, lo, fa, hi, fb);
            let tol = abs_tol * (hi - lo) / (b - a).max(1e-300);
            adapt(&f, lo, fa, hi, fb, m, fm, whole, tol, MAX_DEPTH)
        })
        .collect();
    let (value, err) = parts
        .iter()
        .fold((Complex64::new(0.0, 0.0), 0.0), |(v, e), &(pv, pe)| (v + pv, e + pe));
    Ok(QuadResult {
        re: value.re,
        im: value.im,
        error_estimate: err,
        pieces: pieces.len(),
    })
}

/// `v(beta; P) = int_{omega R}^{P} rho(log z / log R)^omega e(sum beta_i z^{k_i}) dz`
/// with `omega = 1` when `smooth_r` is given and `omega = 0` otherwise.
pub fn v_integral(beta: &[f64], k_vec: &[u32], p: f64, smooth_r: Option<f64>) -> Result<Complex64> {
    if !(p >= 2.0) {
        return Err(Error::invalid("v needs P >= 2"));
    }
    let lower = smooth_r.unwrap_or(0.0);
    if lower > p {
        return Err(Error::invalid("R exceeds P"));
    }
    Ok(oscillatory_integral(beta, k_vec, lower, p, smooth_r, DEFAULT_QUAD_TOL)?.value())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeScan {
    pub k_vec: Vec<u32>,
    #[serde(rename = "P")]
    pub p: f64,
    pub lower: f64,
    /// decay exponent in `P (1 + sum |beta_i| P^{k_i})^{-decay}`
    pub decay: f64,
    pub points: usize,
    pub max_constant: f64,
    pub argmax_beta: Vec<f64>,
}

/// Default grid of scaled offsets `|beta_i| P^{k_i}`.
pub fn default_envelope_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend((-2..=6).map(|i| 10f64.powf(i as f64 * 0.5)));
    g
}

/// Largest observed `|int_lower^P e(...)| / (P (1 + sum |beta_i| P^{k_i})^{-decay})`
/// with each `beta_i = +-g / P^{k_i}` for `g` in `grid`.
pub fn envelope_scan(k_vec: &[u32], p: f64, lower: f64, decay: f64, grid: &[f64]) -> Result<EnvelopeScan> {
    if k_vec.is_empty() || grid.is_empty() {
        return Err(Error::invalid("envelope scan needs exponents and a grid"));
    }
    let axis: Vec<f64> = grid
        .iter()
        .flat_map(|&g| if g == 0.0 { vec![0.0] } else { vec![g, -g] })
        .collect();
    let t = k_vec.len();
    let total = axis.len().pow(t as u32);
    let pts: Vec<Vec<f64>> = (0..total)
        .map(|mut idx| {
            (0..t)
                .map(|i| {
                    let g = axis[idx % axis.len()];
                    idx /= axis.len();
                    g / p.powi(k_vec[i] as i32)
                })
                .collect()
        })
        .collect();
    let ratios: Vec<f64> = pts
        .par_iter()
        .map(|beta| {
            let v = oscillatory_integral(beta, k_vec, lower, p, None, 1e-7)?.value();
            let size: f64 = beta.iter().zip(k_vec).map(|(b, &k)| b.abs() * p.powi(k as i32)).sum();
            Ok(v.norm() / (p * (1.0 + size).powf(-decay)))
        })
        .collect::<Result<_>>()?;
    let (i, &best) = ratios
        .iter()
        .enumerate()
        .fold((0, &ratios[0]), |acc, (i, r)| if *r > *acc.1 { (i, r) } else { acc });
    Ok(EnvelopeScan {
        k_vec: k_vec.to_vec(),
        p,
        lower,
        decay,
        points: total,
        max_constant: best,
        argmax_beta: pts[i].clone(),
    })
}
