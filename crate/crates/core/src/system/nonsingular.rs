use num_bigint::BigInt;
use num_traits::Zero;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AdditiveSystem, DegreeProfile};
use crate::error::{Error, Result};

/// Default cap on the number of minors the exhaustive check may visit.
pub const DEFAULT_MINOR_BUDGET: u128 = 20_000_000;

const CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum CheckMode {
    Exhaustive { budget: u128 },
    Randomized { seed: u64, trials: u64 },
}

impl Default for CheckMode {
    fn default() -> Self {
        CheckMode::Exhaustive {
            budget: DEFAULT_MINOR_BUDGET,
        }
    }
}

/// A vanishing `mu_l x mu_l` minor. Indices are 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinorWitness {
    pub level: usize,
    pub slot: usize,
    pub degree: u32,
    pub rows: Vec<usize>,
    pub columns: Vec<usize>,
}

impl std::fmt::Display for MinorWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let cols: Vec<String> = self.columns.iter().map(|j| (j + 1).to_string()).collect();
        write!(
            f,
            "level {} exponent {} (degree {}): minor on columns {{{}}} vanishes",
            self.level + 1,
            self.slot + 1,
            self.degree,
            cols.join(",")
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonSingularityReport {
    pub holds: bool,
    /// True when the verdict is a decision (exhaustive search, or any failure).
    pub certified: bool,
    pub witness: Option<MinorWitness>,
    pub minors_checked: u64,
}

/// Determinant by fraction-free elimination. Runs in `i128` and redoes the
/// computation with big integers if an intermediate overflows.
pub fn bareiss_determinant(m: &[Vec<i64>]) -> BigInt {
    match det_i128(m) {
        Some(d) => BigInt::from(d),
        None => det_big(m),
    }
}

fn det_is_zero(m: &[Vec<i64>]) -> bool {
    match det_i128(m) {
        Some(d) => d == 0,
        None => det_big(m).is_zero(),
    }
}

fn det_i128(m: &[Vec<i64>]) -> Option<i128> {
    let n = m.len();
    if n == 0 {
        return Some(1);
    }
    let mut a: Vec<Vec<i128>> = m
        .iter()
        .map(|row| row.iter().map(|&x| x as i128).collect())
        .collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            let Some(p) = (k + 1..n).find(|&i| a[i][k] != 0) else {
                return Some(0);
            };
            a.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let lhs = a[i][j].checked_mul(a[k][k])?;
                let rhs = a[i][k].checked_mul(a[k][j])?;
                a[i][j] = lhs.checked_sub(rhs)? / prev;
            }
        }
        prev = a[k][k];
    }
    a[n - 1][n - 1].checked_mul(sign)
}

fn det_big(m: &[Vec<i64>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::from(1);
    }
    let mut a: Vec<Vec<BigInt>> = m
        .iter()
        .map(|row| row.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let mut negate = false;
    let mut prev = BigInt::from(1);
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            let Some(p) = (k + 1..n).find(|&i| !a[i][k].is_zero()) else {
                return BigInt::zero();
            };
            a.swap(k, p);
            negate = !negate;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    if negate {
        -d
    } else {
        d
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Advances `comb` to the next `k`-subset of `0..n` in lexicographic order.
fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if comb[i] < n - k + i {
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn minor(sys: &AdditiveSystem, rows: &[usize], cols: &[usize]) -> Vec<Vec<i64>> {
    rows.iter()
        .map(|&i| cols.iter().map(|&j| sys.coeff(i, j)).collect())
        .collect()
}

/// Number of minors the exhaustive check visits.
pub fn minor_count(sys: &AdditiveSystem, prof: &DegreeProfile) -> u128 {
    prof.mu
        .iter()
        .zip(&prof.nu)
        .map(|(&m, &n)| binomial(sys.s() as u128, m as u128).saturating_mul(n as u128))
        .fold(0u128, |a, b| a.saturating_add(b))
}

/// Decides whether every `mu_l x mu_l` minor of every exponent block is
/// nonzero. Exhaustive mode reports the first vanishing minor in the order
/// (level, exponent, lexicographic column set). Randomized mode only searches
/// for counterexamples.
pub fn check_highly_nonsingular(
    sys: &AdditiveSystem,
    prof: &DegreeProfile,
    mode: CheckMode,
) -> Result<NonSingularityReport> {
    let s = sys.s();
    let slots = prof.exponent_slots();
    match mode {
        CheckMode::Exhaustive { budget } => {
            let needed = minor_count(sys, prof);
            if needed > budget {
                return Err(Error::budget(
                    "exhaustive minor enumeration (try randomized mode)",
                    needed,
                    budget,
                ));
            }
            let mut checked: u64 = 0;
            for &(l, n) in &slots {
                let mu = prof.mu[l];
                let rows = prof.level_rows(l, n);
                if mu > s {
                    // no mu-tuple of columns exists; the condition is vacuous
                    continue;
                }
                let mut comb: Vec<usize> = (0..mu).collect();
                let mut more = true;
                while more {
                    let mut chunk = Vec::with_capacity(CHUNK);
                    while more && chunk.len() < CHUNK {
                        chunk.push(comb.clone());
                        more = next_combination(&mut comb, s);
                    }
                    let hit = chunk
                        .par_iter()
                        .position_first(|cols| det_is_zero(&minor(sys, rows, cols)));
                    if let Some(pos) = hit {
                        checked += pos as u64 + 1;
                        return Ok(NonSingularityReport {
                            holds: false,
                            certified: true,
                            witness: Some(MinorWitness {
                                level: l,
                                slot: n,
                                degree: prof.k_table[l][n],
                                rows: rows.to_vec(),
                                columns: chunk[pos].clone(),
                            }),
                            minors_checked: checked,
                        });
                    }
                    checked += chunk.len() as u64;
                }
            }
            Ok(NonSingularityReport {
                holds: true,
                certified: true,
                witness: None,
                minors_checked: checked,
            })
        }
        CheckMode::Randomized { seed, trials } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let usable: Vec<(usize, usize)> =
                slots.into_iter().filter(|&(l, _)| prof.mu[l] <= s).collect();
            if usable.is_empty() {
                return Ok(NonSingularityReport {
                    holds: true,
                    certified: false,
                    witness: None,
                    minors_checked: 0,
                });
            }
            for trial in 0..trials {
                let (l, n) = usable[rng.gen_range(0..usable.len())];
                let mut cols = sample(&mut rng, s, prof.mu[l]).into_vec();
                cols.sort_unstable();
                let rows = prof.level_rows(l, n);
                if det_is_zero(&minor(sys, rows, &cols)) {
                    return Ok(NonSingularityReport {
                        holds: false,
                        certified: true,
                        witness: Some(MinorWitness {
                            level: l,
                            slot: n,
                            degree: prof.k_table[l][n],
                            rows: rows.to_vec(),
                            columns: cols,
                        }),
                        minors_checked: trial + 1,
                    });
                }
            }
            Ok(NonSingularityReport {
                holds: true,
                certified: false,
                witness: None,
                minors_checked: trials,
            })
        }
    }
}

impl MinorWitness {
    /// Recomputes the witnessed minor.
    pub fn determinant(&self, sys: &AdditiveSystem) -> BigInt {
        bareiss_determinant(&minor(sys, &self.rows, &self.columns))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{derive_profile, parse_system};

    #[test]
    fn small_determinants() {
        assert_eq!(bareiss_determinant(&[vec![1, 2], vec![3, 4]]), BigInt::from(-2));
        assert_eq!(bareiss_determinant(&[vec![0, 1], vec![1, 0]]), BigInt::from(-1));
        assert_eq!(
            bareiss_determinant(&[vec![2, 0, 1], vec![1, 3, 2], vec![1, 1, 4]]),
            BigInt::from(18)
        );
        assert_eq!(bareiss_determinant(&[vec![1, 2], vec![2, 4]]), BigInt::zero());
    }

    #[test]
    fn big_fallback_matches() {
        let big = i64::MAX / 3;
        let m = vec![vec![big, 1, 7], vec![5, big, 2], vec![3, 9, big]];
        let expect = {
            let b = BigInt::from(big);
            let e = |x: i64| BigInt::from(x);
            &b * (&b * &b - e(18)) - e(1) * (e(5) * &b - e(6)) + e(7) * (e(45) - e(3) * &b)
        };
        assert_eq!(bareiss_determinant(&m), expect);
    }

    #[test]
    fn single_equation_always_holds() {
        let sys = parse_system("5: 3 -1 4 1 -5").unwrap();
        let prof = derive_profile(&sys);
        let rep = check_highly_nonsingular(&sys, &prof, CheckMode::default()).unwrap();
        assert!(rep.holds && rep.witness.is_none());
        assert_eq!(rep.minors_checked, 5);
    }

    #[test]
    fn vanishing_minor_found_first() {
        let sys = parse_system("2: 1 1 1\n2: 1 1 2").unwrap();
        let prof = derive_profile(&sys);
        let rep = check_highly_nonsingular(&sys, &prof, CheckMode::default()).unwrap();
        assert!(!rep.holds);
        let w = rep.witness.unwrap();
        assert_eq!(w.columns, vec![0, 1]);
        assert!(w.determinant(&sys).is_zero());
        assert_eq!(rep.minors_checked, 1);
    }

    #[test]
    fn budget_enforced() {
        let sys = parse_system("2: 1 2 3 4 5 6\n2: 6 5 4 3 2 7").unwrap();
        let prof = derive_profile(&sys);
        let err = check_highly_nonsingular(&sys, &prof, CheckMode::Exhaustive { budget: 10 })
            .unwrap_err();
        assert!(matches!(err, Error::Budget { needed: 15, .. }));
    }

    #[test]
    fn randomized_never_certifies_success() {
        let sys = parse_system("2: 1 2 3 4\n2: 4 3 2 7").unwrap();
        let prof = derive_profile(&sys);
        let rep = check_highly_nonsingular(&sys, &prof, CheckMode::Randomized { seed: 1, trials: 50 })
            .unwrap();
        assert!(rep.holds && !rep.certified);

        let bad = parse_system("2: 1 1 1\n2: 1 1 2").unwrap();
        let prof = derive_profile(&bad);
        let rep = check_highly_nonsingular(&bad, &prof, CheckMode::Randomized { seed: 3, trials: 200 })
            .unwrap();
        assert!(!rep.holds && rep.certified);
    }

    #[test]
    fn combinations_in_order() {
        let mut c = vec![0, 1];
        let mut seen = vec![c.clone()];
        while next_combination(&mut c, 4) {
            seen.push(c.clone());
        }
        assert_eq!(
            seen,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
    }
}
