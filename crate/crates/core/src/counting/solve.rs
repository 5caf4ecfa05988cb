use std::collections::HashMap;
use std::hash::Hash;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::range::{enumerate_range, RangeSpec};
use crate::error::{Error, Result};
use crate::system::AdditiveSystem;

/// Cap on the number of tuples brute force may visit.
pub const DEFAULT_BRUTE_BUDGET: u128 = 5_000_000_000;
/// Cap on the number of half-tuples meet-in-the-middle may aggregate.
pub const DEFAULT_MITM_BUDGET: u128 = 400_000_000;
/// Largest value span the dense single-equation histogram may allocate.
const DENSE_SPAN_LIMIT: i128 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Brute,
    Mitm,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute" => Ok(Method::Brute),
            "mitm" => Ok(Method::Mitm),
            other => Err(Error::invalid(format!("unknown counting method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Brute => "brute",
            Method::Mitm => "mitm",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub count: u128,
    pub system_digest: String,
    pub range: RangeSpec,
    pub method: Method,
    pub wall_time: f64,
}

/// `c_ij x^{d_i}` for every variable `j`, range element and equation `i`.
pub(crate) struct ValueTable {
    r: usize,
    s: usize,
    n: usize,
    data: Vec<i128>,
}

impl ValueTable {
    pub(crate) fn new(sys: &AdditiveSystem, xs: &[u64]) -> Result<Self> {
        let (r, s, n) = (sys.r(), sys.s(), xs.len());
        if n == 0 {
            return Ok(ValueTable { r, s, n, data: Vec::new() });
        }
        let xmax = *xs.iter().max().unwrap() as i128;
        // every partial sum is bounded by sum_j |c_ij| * xmax^{d_i}
        for (i, &d) in sys.degrees().iter().enumerate() {
            let pow = xmax
                .checked_pow(d)
                .ok_or_else(|| Error::Overflow(format!("{xmax}^{d} exceeds 128 bits")))?;
            sys.coeffs()[i]
                .iter()
                .try_fold(0i128, |acc, &c| acc.checked_add(pow.checked_mul(c.unsigned_abs() as i128)?))
                .ok_or_else(|| {
                    Error::Overflow(format!("partial sums of equation {} exceed 128 bits", i + 1))
                })?;
        }
        let mut data = Vec::with_capacity(s * n * r);
        for j in 0..s {
            for &x in xs {
                for i in 0..r {
                    let d = sys.degrees()[i];
                    data.push(sys.coeff(i, j) as i128 * (x as i128).pow(d));
                }
            }
        }
        Ok(ValueTable { r, s, n, data })
    }

    #[inline]
    fn get(&self, j: usize, idx: usize) -> &[i128] {
        let at = (j * self.n + idx) * self.r;
        &self.data[at..at + self.r]
    }

    pub(crate) fn tuples_fit_u128(&self, vars: usize) -> bool {
        (vars as f64) * (self.n.max(1) as f64).log2() < 127.0
    }
}

pub(crate) fn tuple_count(n: usize, vars: usize) -> u128 {
    (n as u128).checked_pow(vars as u32).unwrap_or(u128::MAX)
}

pub(crate) fn brute_count(t: &ValueTable) -> u128 {
    let (r, s, n) = (t.r, t.s, t.n);
    if n == 0 {
        return 0;
    }
    (0..n)
        .into_par_iter()
        .map(|i0| {
            let mut partial = vec![0i128; (s + 1) * r];
            partial[r..2 * r].copy_from_slice(t.get(0, i0));
            let mut idx = vec![0usize; s];
            let mut count = 0u128;
            if s == 1 {
                return u128::from(partial[r..2 * r].iter().all(|&v| v == 0));
            }
            // depth-first over variables 1..s with an explicit index stack
            let mut j = 1;
            loop {
                if idx[j] == n {
                    idx[j] = 0;
                    j -= 1;
                    if j == 0 {
                        break;
                    }
                    idx[j] += 1;
                    continue;
                }
                let v = t.get(j, idx[j]);
                let (done, rest) = partial.split_at_mut((j + 1) * r);
                let prev = &done[j * r..(j + 1) * r];
                let cur = &mut rest[..r];
                for i in 0..r {
                    cur[i] = prev[i] + v[i];
                }
                if j + 1 == s {
                    if cur.iter().all(|&x| x == 0) {
                        count += 1;
                    }
                    idx[j] += 1;
                } else {
                    j += 1;
                }
            }
            count
        })
        .sum()
}

trait PartialKey: Clone + Eq + Hash + Send + Sync {
    fn zero(r: usize) -> Self;
    fn shifted(&self, v: &[i128]) -> Self;
    fn negated(&self) -> Self;
}

impl PartialKey for [i128; 4] {
    fn zero(_: usize) -> Self {
        [0; 4]
    }
    fn shifted(&self, v: &[i128]) -> Self {
        let mut out = *self;
        for (o, x) in out.iter_mut().zip(v) {
            *o += x;
        }
        out
    }
    fn negated(&self) -> Self {
        self.map(|x| -x)
    }
}

impl PartialKey for Vec<i128> {
    fn zero(r: usize) -> Self {
        vec![0; r]
    }
    fn shifted(&self, v: &[i128]) -> Self {
        self.iter().zip(v).map(|(a, b)| a + b).collect()
    }
    fn negated(&self) -> Self {
        self.iter().map(|x| -x).collect()
    }
}

/// Multiplicity of every partial value vector over the given variables.
fn aggregate<K: PartialKey>(t: &ValueTable, cols: &[usize]) -> HashMap<K, u128> {
    let mut map: HashMap<K, u128> = HashMap::new();
    map.insert(K::zero(t.r), 1);
    for &j in cols {
        let mut step: HashMap<K, u128> = HashMap::with_capacity(map.len() * 2);
        for (key, &mult) in &map {
            for idx in 0..t.n {
                *step.entry(key.shifted(t.get(j, idx))).or_insert(0) += mult;
            }
        }
        map = step;
    }
    map
}

fn join<K: PartialKey>(left: &HashMap<K, u128>, right: &HashMap<K, u128>) -> u128 {
    left.par_iter()
        .map(|(k, &a)| right.get(&k.negated()).map_or(0, |&b| a * b))
        .sum()
}

struct Dense {
    min: i128,
    counts: Vec<u128>,
}

fn dense_bounds(t: &ValueTable, cols: &[usize]) -> (i128, i128) {
    cols.iter().fold((0, 0), |(lo, hi), &j| {
        let (a, b) = (0..t.n).fold((i128::MAX, i128::MIN), |(a, b), idx| {
            let v = t.get(j, idx)[0];
            (a.min(v), b.max(v))
        });
        (lo + a, hi + b)
    })
}

fn dense_aggregate(t: &ValueTable, cols: &[usize]) -> Dense {
    let mut cur = Dense {
        min: 0,
        counts: vec![1],
    };
    for &j in cols {
        let mut vals: Vec<i128> = (0..t.n).map(|idx| t.get(j, idx)[0]).collect();
        vals.sort_unstable();
        let mut hist: Vec<(i128, u128)> = Vec::new();
        for v in vals {
            match hist.last_mut() {
                Some((w, m)) if *w == v => *m += 1,
                _ => hist.push((v, 1)),
            }
        }
        let vmin = hist[0].0;
        let vmax = hist.last().unwrap().0;
        let width = cur.counts.len() + (vmax - vmin) as usize;
        let mut next = vec![0u128; width];
        for (a, &c) in cur.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for &(w, m) in &hist {
                next[a + (w - vmin) as usize] += c * m;
            }
        }
        cur = Dense {
            min: cur.min + vmin,
            counts: next,
        };
    }
    cur
}

fn dense_join(left: &Dense, right: &Dense) -> u128 {
    let rmax = right.min + right.counts.len() as i128 - 1;
    left.counts
        .par_iter()
        .enumerate()
        .map(|(a, &c)| {
            if c == 0 {
                return 0;
            }
            let want = -(left.min + a as i128);
            if want < right.min || want > rmax {
                0
            } else {
                c * right.counts[(want - right.min) as usize]
            }
        })
        .sum()
}

/// `sum_v H(v)^2` where `H` counts the partial value vectors over `cols`.
pub(crate) fn squared_multiplicities(t: &ValueTable, cols: &[usize]) -> u128 {
    if t.n == 0 {
        return 0;
    }
    if t.r == 1 {
        let (lo, hi) = dense_bounds(t, cols);
        if hi - lo < DENSE_SPAN_LIMIT {
            return dense_aggregate(t, cols).counts.par_iter().map(|&c| c * c).sum();
        }
    }
    if t.r <= 4 {
        aggregate::<[i128; 4]>(t, cols).values().map(|&c| c * c).sum()
    } else {
        aggregate::<Vec<i128>>(t, cols).values().map(|&c| c * c).sum()
    }
}

/// Meet in the middle with the first `split` variables on the left.
pub(crate) fn mitm_count_split(t: &ValueTable, split: usize) -> Result<u128> {
    if t.n == 0 {
        return Ok(0);
    }
    let left: Vec<usize> = (0..split).collect();
    let right: Vec<usize> = (split..t.s).collect();
    if t.r == 1 {
        let (llo, lhi) = dense_bounds(t, &left);
        let (rlo, rhi) = dense_bounds(t, &right);
        if lhi - llo < DENSE_SPAN_LIMIT && rhi - rlo < DENSE_SPAN_LIMIT {
            return Ok(dense_join(&dense_aggregate(t, &left), &dense_aggregate(t, &right)));
        }
    }
    if t.r <= 4 {
        let l = aggregate::<[i128; 4]>(t, &left);
        let r = aggregate::<[i128; 4]>(t, &right);
        Ok(join(&l, &r))
    } else {
        let l = aggregate::<Vec<i128>>(t, &left);
        let r = aggregate::<Vec<i128>>(t, &right);
        Ok(join(&l, &r))
    }
}

/// Default split: the left half takes the extra variable when `s` is odd.
pub fn default_split(s: usize) -> usize {
    s.div_ceil(2)
}

/// Exact number of `x` in `xs^s` solving every equation of `sys`.
pub fn count_over(sys: &AdditiveSystem, xs: &[u64], method: Method) -> Result<u128> {
    let t = ValueTable::new(sys, xs)?;
    if !t.tuples_fit_u128(sys.s()) {
        return Err(Error::Overflow(format!(
            "{}^{} tuples exceed the 128-bit count range",
            xs.len(),
            sys.s()
        )));
    }
    match method {
        Method::Brute => {
            let needed = tuple_count(xs.len(), sys.s());
            if needed > DEFAULT_BRUTE_BUDGET {
                return Err(Error::budget("brute-force enumeration", needed, DEFAULT_BRUTE_BUDGET));
            }
            Ok(brute_count(&t))
        }
        Method::Mitm => {
            let split = default_split(sys.s());
            let needed = tuple_count(xs.len(), split);
            if needed > DEFAULT_MITM_BUDGET {
                return Err(Error::budget("meet-in-the-middle half", needed, DEFAULT_MITM_BUDGET));
            }
            mitm_count_split(&t, split)
        }
    }
}

/// Meet in the middle with an explicit split point.
pub fn count_over_split(sys: &AdditiveSystem, xs: &[u64], split: usize) -> Result<u128> {
    if split > sys.s() {
        return Err(Error::invalid(format!("split {split} exceeds s = {}", sys.s())));
    }
    let t = ValueTable::new(sys, xs)?;
    if !t.tuples_fit_u128(sys.s()) {
        return Err(Error::Overflow("tuple count exceeds 128 bits".to_string()));
    }
    mitm_count_split(&t, split)
}

pub fn count_solutions(sys: &AdditiveSystem, range: &RangeSpec, method: Method) -> Result<CountResult> {
    let start = Instant::now();
    let xs = enumerate_range(range)?;
    let count = count_over(sys, &xs, method)?;
    Ok(CountResult {
        count,
        system_digest: sys.digest(),
        range: *range,
        method,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::parse_system;

    fn both(sys: &AdditiveSystem, p: u64) -> (u128, u128) {
        let xs: Vec<u64> = (1..=p).collect();
        (
            count_over(sys, &xs, Method::Brute).unwrap(),
            count_over(sys, &xs, Method::Mitm).unwrap(),
        )
    }

    #[test]
    fn diagonal_only() {
        let sys = parse_system("3: 1 -1").unwrap();
        assert_eq!(both(&sys, 17), (17, 17));
    }

    #[test]
    fn positive_coefficients_have_no_solutions() {
        let sys = parse_system("2: 1 2 3").unwrap();
        assert_eq!(both(&sys, 9), (0, 0));
    }

    #[test]
    fn two_squares_equal_two_squares() {
        let sys = parse_system("2: 1 1 -1 -1").unwrap();
        // independent: sum over m of r(m)^2
        let mut r = HashMap::new();
        for a in 1..=10u64 {
            for b in 1..=10u64 {
                *r.entry(a * a + b * b).or_insert(0u128) += 1;
            }
        }
        let expect: u128 = r.values().map(|v| v * v).sum();
        assert_eq!(both(&sys, 10), (expect, expect));
    }

    #[test]
    fn two_equations_hashed_path() {
        let sys = parse_system("3: 1 1 -1 -1 2 -2\n2: 1 -1 1 -1 1 -1").unwrap();
        let (b, m) = both(&sys, 7);
        assert_eq!(b, m);
    }

    #[test]
    fn split_does_not_matter() {
        let sys = parse_system("2: 1 2 -1 -3 1").unwrap();
        let xs: Vec<u64> = (1..=8).collect();
        let counts: Vec<u128> = (0..=5).map(|k| count_over_split(&sys, &xs, k).unwrap()).collect();
        assert!(counts.windows(2).all(|w| w[0] == w[1]), "{counts:?}");
    }

    #[test]
    fn overflow_is_an_error() {
        let sys = parse_system("20: 1 -1").unwrap();
        let xs = vec![1u64 << 10];
        assert!(matches!(count_over(&sys, &xs, Method::Mitm), Err(Error::Overflow(_))));
    }
}
