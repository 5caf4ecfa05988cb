use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::primes::is_prime;
use crate::system::AdditiveSystem;

/// Cap on `s * p^{ri} * p^i`, the work of one depth of the residue convolution.
pub const DEFAULT_MOD_BUDGET: u128 = 4_000_000_000;
/// Cap on the number of residue classes `p^{ri}` held in memory.
pub const MAX_RESIDUE_CELLS: u128 = 1 << 23;
/// Cap on `p^{is}` for the naive enumerator.
pub const NAIVE_BUDGET: u128 = 50_000_000;

/// Both counts needed at one depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModCounts {
    /// `#{x mod p^i : F(x) = 0 mod p^i}`
    pub full: BigUint,
    /// `#{x mod p^i : F(x) = 0 mod p^{i-1}}`
    pub coarse: BigUint,
}

trait Cell: Clone + Default + Send + Sync {
    fn one() -> Self;
    fn add_scaled(&mut self, x: &Self, m: u64);
    fn into_big(self) -> BigUint;
}

impl Cell for u128 {
    fn one() -> Self {
        1
    }
    fn add_scaled(&mut self, x: &Self, m: u64) {
        *self += x * m as u128;
    }
    fn into_big(self) -> BigUint {
        BigUint::from(self)
    }
}

impl Cell for BigUint {
    fn one() -> Self {
        <BigUint as One>::one()
    }
    fn add_scaled(&mut self, x: &Self, m: u64) {
        if !x.is_zero() {
            *self += x * m;
        }
    }
    fn into_big(self) -> BigUint {
        self
    }
}

fn checked_pow(p: u64, e: u32) -> Option<u128> {
    (p as u128).checked_pow(e)
}

fn pow_mod(x: u64, d: u32, m: u64) -> u64 {
    let m = m as u128;
    let (mut acc, mut base, mut d) = (1 % m, x as u128 % m, d);
    while d > 0 {
        if d & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        d >>= 1;
    }
    acc as u64
}

fn check_prime_depth(p: u64, i: u32) -> Result<()> {
    if !is_prime(p) {
        return Err(Error::invalid(format!("{p} is not prime")));
    }
    if checked_pow(p, i).is_none_or(|m| m > u64::MAX as u128) {
        return Err(Error::Overflow(format!("{p}^{i} exceeds 64 bits")));
    }
    Ok(())
}

/// Work estimate `s * p^{ri} * p^i` for one depth.
pub fn mod_cost(sys: &AdditiveSystem, p: u64, i: u32) -> Option<u128> {
    let cells = checked_pow(p, i.checked_mul(sys.r() as u32)?)?;
    cells.checked_mul(checked_pow(p, i)?)?.checked_mul(sys.s() as u128)
}

/// Residue vectors `(c_ij x^{d_i} mod m)_i` of variable `j` with their
/// multiplicities over `x mod m`.
fn support(sys: &AdditiveSystem, j: usize, m: u64) -> Vec<(Vec<u64>, u64)> {
    let mut hist: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
    for x in 0..m {
        let v: Vec<u64> = (0..sys.r())
            .map(|i| {
                let c = sys.coeff(i, j).rem_euclid(m as i64) as u128;
                (c * pow_mod(x, sys.degrees()[i], m) as u128 % m as u128) as u64
            })
            .collect();
        *hist.entry(v).or_insert(0) += 1;
    }
    hist.into_iter().collect()
}

fn convolve<T: Cell>(sys: &AdditiveSystem, m: u64) -> Vec<T> {
    let r = sys.r();
    let cells = (m as usize).pow(r as u32);
    let mut cur: Vec<T> = vec![T::default(); cells];
    for (v, mult) in support(sys, 0, m) {
        let idx = encode(&v, m);
        cur[idx].add_scaled(&T::one(), mult);
    }
    for j in 1..sys.s() {
        let sup = support(sys, j, m);
        let mut next: Vec<T> = vec![T::default(); cells];
        next.par_iter_mut().enumerate().for_each(|(w, out)| {
            let wd = decode(w, m, r);
            for (v, mult) in &sup {
                let mut idx = 0usize;
                for i in (0..r).rev() {
                    idx = idx * m as usize + ((wd[i] + m - v[i]) % m) as usize;
                }
                out.add_scaled(&cur[idx], *mult);
            }
        });
        cur = next;
    }
    cur
}

fn encode(v: &[u64], m: u64) -> usize {
    v.iter().rev().fold(0usize, |acc, &d| acc * m as usize + d as usize)
}

fn decode(mut w: usize, m: u64, r: usize) -> Vec<u64> {
    (0..r)
        .map(|_| {
            let d = (w % m as usize) as u64;
            w /= m as usize;
            d
        })
        .collect()
}

/// `M(p^i)` together with the count of residues solving the system to the
/// previous modulus, from the full distribution of `F(x) mod p^i`.
pub fn mod_counts(sys: &AdditiveSystem, p: u64, i: u32) -> Result<ModCounts> {
    check_prime_depth(p, i)?;
    if i == 0 {
        return Ok(ModCounts {
            full: <BigUint as One>::one(),
            coarse: <BigUint as One>::one(),
        });
    }
    let m = checked_pow(p, i).unwrap() as u64;
    let cells = checked_pow(p, i * sys.r() as u32).unwrap_or(u128::MAX);
    if cells > MAX_RESIDUE_CELLS {
        return Err(Error::budget("residue classes", cells, MAX_RESIDUE_CELLS));
    }
    let cost = mod_cost(sys, p, i).unwrap_or(u128::MAX);
    if cost > DEFAULT_MOD_BUDGET {
        return Err(Error::budget("residue convolution", cost, DEFAULT_MOD_BUDGET));
    }
    let bits = sys.s() as f64 * i as f64 * (p as f64).log2();
    let hist: Vec<BigUint> = if bits < 126.0 {
        convolve::<u128>(sys, m).into_iter().map(Cell::into_big).collect()
    } else {
        convolve::<BigUint>(sys, m)
    };
    let coarse_step = m / p;
    let r = sys.r();
    let coarse = hist
        .iter()
        .enumerate()
        .filter(|(w, _)| decode(*w, m, r).iter().all(|&d| d % coarse_step == 0))
        .map(|(_, c)| c)
        .sum();
    Ok(ModCounts {
        full: hist[0].clone(),
        coarse,
    })
}

/// `M(p^i)`: solutions of every equation modulo `p^i`, over `(Z/p^i)^s`.
pub fn count_mod(sys: &AdditiveSystem, p: u64, i: u32) -> Result<BigUint> {
    Ok(mod_counts(sys, p, i)?.full)
}

/// Enumerates all of `(Z/p^i)^s`; the oracle for [`count_mod`].
pub fn count_mod_naive(sys: &AdditiveSystem, p: u64, i: u32) -> Result<BigUint> {
    check_prime_depth(p, i)?;
    let m = checked_pow(p, i).unwrap() as u64;
    let total = checked_pow(m, sys.s() as u32).unwrap_or(u128::MAX);
    if total > NAIVE_BUDGET {
        return Err(Error::budget("naive residue enumeration", total, NAIVE_BUDGET));
    }
    let s = sys.s();
    let mut x = vec![0u64; s];
    let mut count = 0u64;
    loop {
        let ok = (0..sys.r()).all(|row| {
            let d = sys.degrees()[row];
            let v = (0..s).fold(0i128, |acc, j| {
                (acc + sys.coeff(row, j) as i128 * pow_mod(x[j], d, m) as i128).rem_euclid(m as i128)
            });
            v == 0
        });
        count += ok as u64;
        let mut j = 0;
        while j < s && x[j] + 1 == m {
            x[j] = 0;
            j += 1;
        }
        if j == s {
            break;
        }
        x[j] += 1;
    }
    Ok(BigUint::from(count))
}
