use std::f64::consts::TAU;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::{enumerate_range, RangeSpec};
use crate::error::{Error, Result};
use crate::system::{derive_profile, AdditiveSystem};

const CHUNK: usize = 4096;

/// Fractional part of `g * n`, computed from the exact binary value of `g`.
///
/// Writing `g = m 2^-e`, the product is `m n / 2^e` and its fractional part
/// is `(m n mod 2^e) / 2^e`, so large `n` loses nothing to rounding.
pub fn frac_mul(g: f64, n: u128) -> f64 {
    if g == 0.0 || n == 0 || !g.is_finite() {
        return 0.0;
    }
    let bits = g.to_bits();
    let negative = bits >> 63 == 1;
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let frac_bits = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if raw_exp == 0 {
        (frac_bits, -1074)
    } else {
        (frac_bits | (1u64 << 52), raw_exp - 1075)
    };
    if exp >= 0 {
        return 0.0;
    }
    let e = (-exp) as u32;
    let f = if e <= 128 {
        let prod = (mant as u128).wrapping_mul(n);
        let low = if e == 128 { prod } else { prod & ((1u128 << e) - 1) };
        low as f64 / 2f64.powi(e as i32)
    } else {
        let modulus = BigUint::from(1u8) << e;
        let low = (BigUint::from(mant) * BigUint::from(n)) % &modulus;
        let shift = low.bits().saturating_sub(60);
        let top = u64::try_from(&low >> shift).unwrap_or(u64::MAX);
        top as f64 * 2f64.powi(shift as i32 - e as i32)
    };
    if negative && f > 0.0 {
        1.0 - f
    } else {
        f
    }
}

/// `e(theta) = exp(2 pi i theta)`.
pub fn e(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * theta)
}

fn powers(x: u64, k_vec: &[u32]) -> Result<Vec<u128>> {
    k_vec
        .iter()
        .map(|&k| {
            (x as u128)
                .checked_pow(k)
                .ok_or_else(|| Error::Overflow(format!("{x}^{k} exceeds 128 bits")))
        })
        .collect()
}

/// `sum_{x in xs} e(gamma_1 x^{k_1} + ... + gamma_t x^{k_t})`.
pub fn f_eval(gamma: &[f64], k_vec: &[u32], xs: &[u64]) -> Result<Complex64> {
    if gamma.len() != k_vec.len() {
        return Err(Error::invalid(format!(
            "{} phases for {} exponents",
            gamma.len(),
            k_vec.len()
        )));
    }
    if let Some(&x) = xs.iter().max() {
        powers(x, k_vec)?;
    }
    // fixed chunking keeps the floating point sum independent of the thread count
    let partial: Vec<Complex64> = xs
        .par_chunks(CHUNK)
        .map(|chunk| {
            chunk
                .iter()
                .map(|&x| {
                    let theta = gamma
                        .iter()
                        .zip(k_vec)
                        .map(|(&g, &k)| frac_mul(g, (x as u128).pow(k)))
                        .sum::<f64>();
                    e(theta)
                })
                .sum()
        })
        .collect();
    Ok(partial.into_iter().sum())
}

pub fn f_eval_range(gamma: &[f64], k_vec: &[u32], range: &RangeSpec) -> Result<Complex64> {
    f_eval(gamma, k_vec, &enumerate_range(range)?)
}

/// Per-variable phase coefficients, one per distinct exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaCoefficients {
    /// Distinct exponents in profile order.
    pub exponents: Vec<u32>,
    /// `gamma[j][slot]`
    pub gamma: Vec<Vec<f64>>,
}

/// `gamma_{j,slot} = sum_{i in block(slot)} c_ij alpha_i`, with `alpha`
/// indexed by the (degree-sorted) rows of `sys`.
pub fn gamma_transform(sys: &AdditiveSystem, alpha: &[f64]) -> Result<GammaCoefficients> {
    if alpha.len() != sys.r() {
        return Err(Error::invalid(format!(
            "alpha has {} entries, the system has {} equations",
            alpha.len(),
            sys.r()
        )));
    }
    let prof = derive_profile(sys);
    let slots = prof.exponent_slots();
    let gamma = (0..sys.s())
        .map(|j| {
            slots
                .iter()
                .map(|&(l, n)| {
                    prof.level_rows(l, n)
                        .iter()
                        .map(|&i| sys.coeff(i, j) as f64 * alpha[i])
                        .sum()
                })
                .collect()
        })
        .collect();
    Ok(GammaCoefficients {
        exponents: prof.exponents(),
        gamma,
    })
}

/// The rational approximation data attached to `alpha = a/q + beta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajorArcApproximant {
    pub q: u64,
    pub a: Vec<i64>,
    /// `Lambda[j][slot] = sum c_ij a_i`
    pub lambda: Vec<Vec<i128>>,
    /// `delta[j][slot] = sum c_ij beta_i`
    pub delta: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
}

impl MajorArcApproximant {
    pub fn new(sys: &AdditiveSystem, alpha: &[f64], q: u64, a: &[i64]) -> Result<Self> {
        if q == 0 || a.len() != sys.r() {
            return Err(Error::invalid("approximant needs q >= 1 and one numerator per equation"));
        }
        let beta: Vec<f64> = alpha
            .iter()
            .zip(a)
            .map(|(&x, &ai)| x - ai as f64 / q as f64)
            .collect();
        let prof = derive_profile(sys);
        let slots = prof.exponent_slots();
        let lambda = (0..sys.s())
            .map(|j| {
                slots
                    .iter()
                    .map(|&(l, n)| {
                        prof.level_rows(l, n)
                            .iter()
                            .map(|&i| sys.coeff(i, j) as i128 * a[i] as i128)
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let delta = gamma_transform(sys, &beta)?.gamma;
        Ok(MajorArcApproximant {
            q,
            a: a.to_vec(),
            lambda,
            delta,
            beta,
        })
    }
}

fn pow_mod(x: u64, k: u32, q: u64) -> u64 {
    let (mut acc, mut base, mut k) = (1u128 % q as u128, x as u128 % q as u128, k);
    while k > 0 {
        if k & 1 == 1 {
            acc = acc * base % q as u128;
        }
        base = base * base % q as u128;
        k >>= 1;
    }
    acc as u64
}

/// `S(q, a) = sum_{x=1}^{q} e((a_1 x^{k_1} + ... + a_t x^{k_t}) / q)`.
#[allow(non_snake_case)]
pub fn complete_sum_S(q: u64, a: &[i64], k_vec: &[u32]) -> Result<Complex64> {
    if q == 0 {
        return Err(Error::invalid("modulus must be positive"));
    }
    if a.len() != k_vec.len() {
        return Err(Error::invalid("one numerator per exponent"));
    }
    let table = unit_roots(q);
    let a_red: Vec<u64> = a.iter().map(|&x| x.rem_euclid(q as i64) as u64).collect();
    Ok((1..=q)
        .map(|x| {
            let res = a_red
                .iter()
                .zip(k_vec)
                .fold(0u128, |acc, (&ai, &k)| (acc + ai as u128 * pow_mod(x, k, q) as u128) % q as u128);
            table[res as usize]
        })
        .sum())
}

fn unit_roots(q: u64) -> Vec<Complex64> {
    (0..q).map(|m| e(m as f64 / q as f64)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqaScan {
    pub q_max: u64,
    pub k_vec: Vec<u32>,
    /// largest exponent, used in the normalisation
    pub k: u32,
    pub max_ratio: f64,
    pub argmax_q: u64,
    pub argmax_a: Vec<i64>,
}

/// Largest `|S(q,a)| / ((q,a)^{1/k} q^{1-1/k})` over `q <= q_max` and all
/// `a` in `[1, q]^t`.
pub fn sqa_bound_scan(q_max: u64, k_vec: &[u32]) -> Result<SqaScan> {
    if q_max == 0 || k_vec.is_empty() {
        return Err(Error::invalid("scan needs q_max >= 1 and at least one exponent"));
    }
    let t = k_vec.len();
    let total = (1..=q_max).map(|q| (q as f64).powi(t as i32 + 1)).sum::<f64>();
    if total > 5e10 {
        return Err(Error::budget("numerator sweep", total as u128, 50_000_000_000));
    }
    let k = *k_vec.iter().max().unwrap();
    let per_q: Vec<(f64, Vec<i64>)> = (1..=q_max)
        .into_par_iter()
        .map(|q| {
            let roots = unit_roots(q);
            let pw: Vec<Vec<u64>> = k_vec
                .iter()
                .map(|&kk| (1..=q).map(|x| pow_mod(x, kk, q)).collect())
                .collect();
            let mut best = (-1.0, Vec::new());
            let mut a = vec![1u64; t];
            loop {
                let s: Complex64 = (0..q as usize)
                    .map(|xi| {
                        let res = a
                            .iter()
                            .zip(&pw)
                            .fold(0u64, |acc, (&ai, p)| (acc + ai * p[xi]) % q);
                        roots[res as usize]
                    })
                    .sum();
                let g = a.iter().fold(q, |g, &ai| g.gcd(&ai));
                let ratio = s.norm() / ((g as f64).powf(1.0 / k as f64) * (q as f64).powf(1.0 - 1.0 / k as f64));
                if ratio > best.0 + 1e-12 {
                    best = (ratio, a.iter().map(|&v| v as i64).collect());
                }
                // odometer over [1, q]^t
                let mut i = 0;
                while i < t && a[i] == q {
                    a[i] = 1;
                    i += 1;
                }
                if i == t {
                    break;
                }
                a[i] += 1;
            }
            best
        })
        .collect();
    let (idx, best) = per_q
        .iter()
        .enumerate()
        .fold((0, &per_q[0]), |acc, (i, b)| if b.0 > acc.1 .0 + 1e-12 { (i, b) } else { acc });
    Ok(SqaScan {
        q_max,
        k_vec: k_vec.to_vec(),
        k,
        max_ratio: best.0,
        argmax_q: idx as u64 + 1,
        argmax_a: best.1.clone(),
    })
}
