use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bigfmt;
use super::count::mod_counts;
use crate::error::{Error, Result};
use crate::primes::is_prime;
use crate::system::AdditiveSystem;

/// When to stop lifting to higher powers of `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthPolicy {
    pub max_depth: u32,
    /// depths always computed, stabilized or not
    #[serde(default)]
    pub min_depth: u32,
    /// `|A(p^i)|` below this counts as converged
    pub tolerance: f64,
    /// seed of the randomized non-singular solution search
    #[serde(default)]
    pub seed: u64,
}

impl Default for DepthPolicy {
    fn default() -> Self {
        DepthPolicy {
            max_depth: 6,
            min_depth: 1,
            tolerance: 1e-9,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalDensity {
    pub p: u64,
    pub depth: u32,
    /// `M(p^1), ..., M(p^depth)`
    #[serde(with = "bigfmt::uint_vec")]
    pub m_values: Vec<BigUint>,
    /// `p^{-i(s-r)} M(p^i)` for `i = 1..=depth`
    #[serde(with = "bigfmt::rat_vec")]
    pub chi_estimates: Vec<BigRational>,
    /// `A(p^1), ..., A(p^depth)`
    #[serde(with = "bigfmt::rat_vec")]
    pub a_values: Vec<BigRational>,
    pub hensel_certified: bool,
    /// a solution mod `p` whose Jacobian has full rank
    pub hensel_witness: Option<Vec<u64>>,
    pub stabilized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl LocalDensity {
    /// Deepest estimate of `chi_p` (1 when nothing could be computed).
    pub fn chi(&self) -> BigRational {
        self.chi_estimates.last().cloned().unwrap_or_else(BigRational::one)
    }

    pub fn chi_f64(&self) -> f64 {
        self.chi().to_f64().unwrap_or(f64::NAN)
    }

    /// `sum_{j <= i} A(p^j) == p^{-i(s-r)} M(p^i)` at every recorded depth.
    pub fn telescoping_holds(&self) -> bool {
        let mut acc = BigRational::one();
        self.a_values.iter().zip(&self.chi_estimates).all(|(a, chi)| {
            acc += a;
            &acc == chi
        })
    }

    /// Size of the last increment; zero once the factor has stabilized.
    pub fn truncation_estimate(&self) -> f64 {
        if self.stabilized {
            0.0
        } else {
            self.a_values.last().and_then(|a| a.abs().to_f64()).unwrap_or(1.0)
        }
    }
}

fn rat_pow(p: u64, e: i64) -> BigRational {
    let base = BigInt::from(p).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        BigRational::from_integer(base)
    } else {
        BigRational::new(BigInt::one(), base)
    }
}

/// `chi_p` from exact counts at increasing depth.
pub fn chi_p(sys: &AdditiveSystem, p: u64, policy: &DepthPolicy) -> Result<LocalDensity> {
    if !is_prime(p) {
        return Err(Error::invalid(format!("{p} is not prime")));
    }
    let (s, r) = (sys.s() as i64, sys.r() as i64);
    let witness = hensel_witness(sys, p, policy.seed);
    // without a non-singular witness, A(p^i) can vanish early and pick up
    // again once i passes twice the p-adic valuation of the degrees
    let min_depth = if witness.is_some() {
        1
    } else {
        let v = sys.degrees().iter().map(|&d| valuation(d as u64, p)).max().unwrap_or(0);
        2 * v + 2
    };
    let mut out = LocalDensity {
        p,
        depth: 0,
        m_values: Vec::new(),
        chi_estimates: Vec::new(),
        a_values: Vec::new(),
        hensel_certified: witness.is_some(),
        hensel_witness: witness,
        stabilized: false,
        note: None,
    };
    for i in 1..=policy.max_depth {
        let counts = match mod_counts(sys, p, i) {
            Ok(c) => c,
            Err(e @ Error::Budget { .. }) => {
                out.note = Some(format!("stopped at depth {}: {e}", i - 1));
                break;
            }
            Err(e) => return Err(e),
        };
        let i64_ = i as i64;
        let full = BigRational::from_integer(BigInt::from(counts.full.clone()));
        let coarse = BigRational::from_integer(BigInt::from(counts.coarse));
        let chi = &full * rat_pow(p, -i64_ * (s - r));
        // A(p^i) = p^{-is} (p^{ir} #{F = 0 mod p^i} - p^{(i-1)r} #{F = 0 mod p^{i-1}})
        let a = (full * rat_pow(p, i64_ * r) - coarse * rat_pow(p, (i64_ - 1) * r)) * rat_pow(p, -i64_ * s);
        let small = a.abs().to_f64().is_some_and(|v| v < policy.tolerance);
        let prev_small = out
            .a_values
            .last()
            .is_some_and(|b: &BigRational| b.abs().to_f64().is_some_and(|v| v < policy.tolerance));
        let small = small && i >= min_depth && (out.hensel_certified || prev_small);
        let stationary = out.hensel_certified && a.is_zero();
        out.depth = i;
        out.m_values.push(counts.full);
        out.chi_estimates.push(chi);
        out.a_values.push(a);
        if (small || stationary) && i >= policy.min_depth {
            out.stabilized = true;
            break;
        }
    }
    Ok(out)
}

fn valuation(mut n: u64, p: u64) -> u32 {
    let mut v = 0;
    while n > 0 && n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

fn pow_mod(x: u64, d: u32, p: u64) -> u64 {
    let (mut acc, mut base, mut d) = (1u128 % p as u128, x as u128 % p as u128, d);
    while d > 0 {
        if d & 1 == 1 {
            acc = acc * base % p as u128;
        }
        base = base * base % p as u128;
        d >>= 1;
    }
    acc as u64
}

fn rank_mod_p(mut m: Vec<Vec<u64>>, p: u64) -> usize {
    let (rows, cols) = (m.len(), m.first().map_or(0, Vec::len));
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(rank, piv);
        let inv = pow_mod(m[rank][c], (p - 2) as u32, p);
        for i in 0..rows {
            if i != rank && m[i][c] != 0 {
                let f = m[i][c] as u128 * inv as u128 % p as u128;
                for k in c..cols {
                    let sub = f * m[rank][k] as u128 % p as u128;
                    m[i][k] = ((m[i][k] as u128 + p as u128 - sub) % p as u128) as u64;
                }
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

fn is_nonsingular_solution(sys: &AdditiveSystem, p: u64, x: &[u64]) -> bool {
    let pp = p as i128;
    let solves = (0..sys.r()).all(|i| {
        let d = sys.degrees()[i];
        x.iter()
            .enumerate()
            .fold(0i128, |acc, (j, &xj)| (acc + sys.coeff(i, j) as i128 * pow_mod(xj, d, p) as i128).rem_euclid(pp))
            == 0
    });
    if !solves {
        return false;
    }
    // gradient rows c_ij d_i x_j^{d_i - 1}
    let jac: Vec<Vec<u64>> = (0..sys.r())
        .map(|i| {
            let d = sys.degrees()[i];
            x.iter()
                .enumerate()
                .map(|(j, &xj)| {
                    let g = sys.coeff(i, j) as i128 * d as i128 * pow_mod(xj, d - 1, p) as i128;
                    g.rem_euclid(pp) as u64
                })
                .collect()
        })
        .collect();
    rank_mod_p(jac, p) == sys.r()
}

/// A solution mod `p` at which the Jacobian of the forms has rank `r`.
///
/// Small spaces are searched exhaustively. Otherwise random values are fixed
/// for the first `s - r` variables and the last `r` run over all residues.
pub fn hensel_witness(sys: &AdditiveSystem, p: u64, seed: u64) -> Option<Vec<u64>> {
    let (s, r) = (sys.s(), sys.r());
    if r > s {
        return None;
    }
    let space = (p as f64).powi(s as i32);
    let scan = |x: &mut Vec<u64>, from: usize| -> bool {
        loop {
            if is_nonsingular_solution(sys, p, x) {
                return true;
            }
            let mut j = from;
            while j < s && x[j] + 1 == p {
                x[j] = 0;
                j += 1;
            }
            if j == s {
                return false;
            }
            x[j] += 1;
        }
    };
    if space <= 2e6 {
        let mut x = vec![0u64; s];
        return scan(&mut x, 0).then_some(x);
    }
    if (p as f64).powi(r as i32) > 1e6 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ p.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    for _ in 0..200 {
        let mut x: Vec<u64> = (0..s).map(|_| rng.gen_range(0..p)).collect();
        for v in &mut x[s - r..] {
            *v = 0;
        }
        if scan(&mut x, s - r) {
            return Some(x);
        }
    }
    None
}
