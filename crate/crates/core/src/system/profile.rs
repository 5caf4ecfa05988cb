use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AdditiveSystem;

/// The degrees of a system regrouped by multiplicity.
///
/// Level `l` (0-based here) collects the `nu[l]` distinct exponents that each
/// occur exactly `mu[l]` times, with `mu` strictly decreasing. Inside a level
/// the exponents are listed in increasing order. Profile rows are ordered
/// level by level, exponent by exponent; `row_order[p]` is the system row
/// that sits at profile position `p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeProfile {
    pub t: usize,
    pub mu: Vec<usize>,
    pub nu: Vec<usize>,
    pub k_table: Vec<Vec<u32>>,
    /// `r_index[l][n]` is the cumulative row count `r_{l,n+1}` (1-based `n`
    /// in the usual notation), so the last entry overall equals `r`.
    pub r_index: Vec<Vec<usize>>,
    pub k_partial: Vec<u64>,
    pub total_degree: u64,
    pub m: usize,
    pub varpi: Vec<usize>,
    pub k_tilde: Vec<u32>,
    pub k: u32,
    pub mu_min: usize,
    pub row_order: Vec<usize>,
}

pub fn derive_profile(sys: &AdditiveSystem) -> DegreeProfile {
    // degree -> system rows carrying it
    let mut by_degree: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &d) in sys.degrees().iter().enumerate() {
        by_degree.entry(d).or_default().push(i);
    }
    // multiplicity -> exponents (ascending, since BTreeMap iterates in order)
    let mut by_mult: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for (&d, rows) in &by_degree {
        by_mult.entry(rows.len()).or_default().push(d);
    }

    let mut mu = Vec::new();
    let mut k_table = Vec::new();
    for (&m, ks) in by_mult.iter().rev() {
        mu.push(m);
        k_table.push(ks.clone());
    }
    let t = mu.len();
    let nu: Vec<usize> = k_table.iter().map(Vec::len).collect();

    let mut r_index = Vec::with_capacity(t);
    let mut row_order = Vec::with_capacity(sys.r());
    let mut acc = 0;
    for (l, ks) in k_table.iter().enumerate() {
        let mut level = Vec::with_capacity(ks.len());
        for k in ks {
            acc += mu[l];
            level.push(acc);
            row_order.extend_from_slice(&by_degree[k]);
        }
        r_index.push(level);
    }

    let k_partial: Vec<u64> = k_table
        .iter()
        .map(|ks| ks.iter().map(|&k| k as u64).sum())
        .collect();
    let total_degree = mu
        .iter()
        .zip(&k_partial)
        .map(|(&m, &kp)| m as u64 * kp)
        .sum();
    let varpi: Vec<usize> = nu
        .iter()
        .scan(0, |acc, &n| {
            *acc += n;
            Some(*acc)
        })
        .collect();
    let k_tilde: Vec<u32> = k_table
        .iter()
        .scan(0u32, |acc, ks| {
            *acc = (*acc).max(*ks.iter().max().unwrap());
            Some(*acc)
        })
        .collect();

    DegreeProfile {
        t,
        m: mu[0],
        mu_min: mu[t - 1],
        k: k_tilde[t - 1],
        mu,
        nu,
        k_table,
        r_index,
        k_partial,
        total_degree,
        varpi,
        k_tilde,
        row_order,
    }
}

impl DegreeProfile {
    /// Profile of a bare degree list (coefficients play no role in it).
    pub fn from_degrees(degrees: &[u32]) -> crate::Result<Self> {
        let sys = AdditiveSystem::new(degrees.to_vec(), vec![vec![1]; degrees.len()])?;
        Ok(derive_profile(&sys))
    }

    pub fn r(&self) -> usize {
        self.row_order.len()
    }

    /// `mu_{l+1}` with the convention `mu_{t+1} = 0` (0-based `l`).
    pub fn mu_next(&self, l: usize) -> usize {
        self.mu.get(l + 1).copied().unwrap_or(0)
    }

    /// System rows forming the block of exponent `k_table[l][n]`.
    pub fn level_rows(&self, l: usize, n: usize) -> &[usize] {
        let end = self.r_index[l][n];
        &self.row_order[end - self.mu[l]..end]
    }

    /// The exponent set `k_h` of levels `0..=h`, ascending.
    pub fn degree_set(&self, h: usize) -> Vec<u32> {
        let mut ks: Vec<u32> = self.k_table[..=h].iter().flatten().copied().collect();
        ks.sort_unstable();
        ks
    }

    /// All distinct exponents in profile order.
    pub fn exponents(&self) -> Vec<u32> {
        self.k_table.iter().flatten().copied().collect()
    }

    /// `(l, n)` coordinates of every distinct exponent in profile order.
    pub fn exponent_slots(&self) -> Vec<(usize, usize)> {
        self.k_table
            .iter()
            .enumerate()
            .flat_map(|(l, ks)| (0..ks.len()).map(move |n| (l, n)))
            .collect()
    }

    /// Rebuilds `(degree, row)` pairs in profile order.
    pub fn reorder<'a>(&self, sys: &'a AdditiveSystem) -> Vec<(u32, &'a [i64])> {
        self.row_order
            .iter()
            .map(|&i| (sys.degrees()[i], sys.coeffs()[i].as_slice()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::parse_system;

    #[test]
    fn kkn_profile() {
        let sys = parse_system("3: 1 1 1\n3: 1 2 3\n2: 1 1 1").unwrap();
        let p = derive_profile(&sys);
        assert_eq!(p.t, 2);
        assert_eq!(p.mu, vec![2, 1]);
        assert_eq!(p.nu, vec![1, 1]);
        assert_eq!(p.m, 2);
        assert_eq!(p.varpi, vec![1, 2]);
        assert_eq!(p.total_degree, 2 * 3 + 2);
        assert_eq!(p.k_tilde, vec![3, 3]);
        assert_eq!(p.r_index, vec![vec![2], vec![3]]);
    }

    #[test]
    fn quadratic_cubic_single_level() {
        let sys = parse_system("2: 1 -1 1\n3: 1 1 -1").unwrap();
        let p = derive_profile(&sys);
        assert_eq!((p.t, p.mu.clone(), p.nu.clone()), (1, vec![1], vec![2]));
        assert_eq!(p.k_table, vec![vec![2, 3]]);
        assert_eq!(p.k_partial, vec![5]);
        assert_eq!(p.total_degree, 5);
        // ascending exponents inside the level: the quadratic row comes first
        assert_eq!(p.row_order, vec![1, 0]);
    }

    #[test]
    fn single_form() {
        let sys = parse_system("7: 1 1 -1").unwrap();
        let p = derive_profile(&sys);
        assert_eq!((p.t, p.total_degree, p.m, p.k), (1, 7, 1, 7));
        assert_eq!(p.mu, vec![1]);
    }

    #[test]
    fn level_rows_follow_blocks() {
        let sys = parse_system("2: 1 1\n5: 1 1\n2: 1 2\n3: 1 1\n3: 2 1\n2: 3 1").unwrap();
        let p = derive_profile(&sys);
        // degree 2 occurs 3 times, 3 twice, 5 once
        assert_eq!(p.mu, vec![3, 2, 1]);
        for (l, ks) in p.k_table.iter().enumerate() {
            for (n, &k) in ks.iter().enumerate() {
                let rows = p.level_rows(l, n);
                assert_eq!(rows.len(), p.mu[l]);
                assert!(rows.iter().all(|&i| sys.degrees()[i] == k));
            }
        }
        assert_eq!(p.degree_set(1), vec![2, 3]);
    }
}
