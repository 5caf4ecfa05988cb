use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::range::{enumerate_range, RangeSpec};
use super::solve::{
    count_solutions, squared_multiplicities, tuple_count, CountResult, Method, ValueTable,
    DEFAULT_MITM_BUDGET,
};
use crate::error::{Error, Result};
use crate::system::{derive_profile, AdditiveSystem, DegreeProfile};

/// The system `sum_{j=1}^{2u} (-1)^j x_j^k = 0`, one row per `k` in `k_vec`.
pub fn mean_value_system(u: usize, k_vec: &[u32]) -> Result<AdditiveSystem> {
    if u == 0 {
        return Err(Error::invalid("u must be at least 1"));
    }
    if k_vec.is_empty() {
        return Err(Error::invalid("exponent list is empty"));
    }
    let mut sorted = k_vec.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("exponents must be distinct"));
    }
    let row: Vec<i64> = (1..=2 * u).map(|j| if j % 2 == 0 { 1 } else { -1 }).collect();
    AdditiveSystem::new(k_vec.to_vec(), vec![row; k_vec.len()])
}

/// `J_{u,k}(A)`: solutions of `x_1^k + ... + x_u^k = y_1^k + ... + y_u^k` for
/// every `k` in `k_vec`, with all variables in the range.
#[allow(non_snake_case)]
pub fn mean_value_J(u: usize, k_vec: &[u32], range: &RangeSpec) -> Result<CountResult> {
    let start = Instant::now();
    let sys = mean_value_system(u, k_vec)?;
    let xs = enumerate_range(range)?;
    let needed = tuple_count(xs.len(), u);
    if needed > DEFAULT_MITM_BUDGET {
        return Err(Error::budget("mean value half-sums", needed, DEFAULT_MITM_BUDGET));
    }
    let half = AdditiveSystem::new(k_vec.to_vec(), vec![vec![1; u]; k_vec.len()])?;
    let table = ValueTable::new(&half, &xs)?;
    if !table.tuples_fit_u128(2 * u) {
        return Err(Error::Overflow("tuple count exceeds 128 bits".to_string()));
    }
    let cols: Vec<usize> = (0..u).collect();
    let count = squared_multiplicities(&table, &cols);
    Ok(CountResult {
        count,
        system_digest: sys.digest(),
        range: *range,
        method: Method::Mitm,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    /// 0-based level `h`
    pub level: usize,
    /// 0-based index `m` inside the level
    pub index: usize,
    pub vars: Vec<usize>,
}

/// Variables split into the excess block `b0` and blocks of size `2 u_h`,
/// `mu_h - mu_{h+1}` of them for level `h`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub u: Vec<usize>,
    pub blocks: Vec<Block>,
    pub b0: Vec<usize>,
    pub s0: usize,
}

impl BlockPartition {
    /// Fills the blocks with consecutive variables, level by level; whatever
    /// is left over goes to `b0`.
    pub fn sequential(prof: &DegreeProfile, u: &[usize], s: usize) -> Result<Self> {
        if u.len() != prof.t {
            return Err(Error::invalid(format!(
                "partition needs {} values of u, got {}",
                prof.t,
                u.len()
            )));
        }
        if u.contains(&0) {
            return Err(Error::invalid("every u_h must be positive"));
        }
        let s0: usize = (0..prof.t).map(|h| (prof.mu[h] - prof.mu_next(h)) * u[h]).sum();
        if 2 * s0 > s {
            return Err(Error::invalid(format!(
                "blocks need 2*s0 = {} variables but the system has {s}",
                2 * s0
            )));
        }
        let mut next = 0;
        let mut blocks = Vec::new();
        for h in 0..prof.t {
            for m in 0..prof.mu[h] - prof.mu_next(h) {
                blocks.push(Block {
                    level: h,
                    index: m,
                    vars: (next..next + 2 * u[h]).collect(),
                });
                next += 2 * u[h];
            }
        }
        Ok(BlockPartition {
            u: u.to_vec(),
            blocks,
            b0: (next..s).collect(),
            s0,
        })
    }

    /// Checks disjointness, coverage and the block sizes against a profile.
    pub fn validate(&self, prof: &DegreeProfile, s: usize) -> Result<()> {
        if self.u.len() != prof.t {
            return Err(Error::invalid("partition and profile disagree on the number of levels"));
        }
        let mut seen = vec![false; s];
        for &v in self.blocks.iter().flat_map(|b| b.vars.iter()).chain(&self.b0) {
            if v >= s || std::mem::replace(&mut seen[v], true) {
                return Err(Error::invalid(format!("variable {v} is out of range or repeated")));
            }
        }
        if seen.iter().any(|&b| !b) {
            return Err(Error::invalid("partition does not cover every variable"));
        }
        for h in 0..prof.t {
            let at_level: Vec<&Block> = self.blocks.iter().filter(|b| b.level == h).collect();
            if at_level.len() != prof.mu[h] - prof.mu_next(h) {
                return Err(Error::invalid(format!("level {} has the wrong number of blocks", h + 1)));
            }
            if at_level.iter().any(|b| b.vars.len() != 2 * self.u[h]) {
                return Err(Error::invalid(format!("level {} has a block of the wrong size", h + 1)));
            }
        }
        let s0: usize = (0..prof.t).map(|h| (prof.mu[h] - prof.mu_next(h)) * self.u[h]).sum();
        if s0 != self.s0 {
            return Err(Error::invalid("s0 does not match the block sizes"));
        }
        Ok(())
    }

    pub fn blocked_vars(&self) -> Vec<usize> {
        self.blocks.iter().flat_map(|b| b.vars.iter().copied()).collect()
    }
}

/// `I_{u,k,M}(A)` as the number of solutions of the system restricted to the
/// blocked variables.
#[allow(non_snake_case)]
pub fn mean_value_I(sys: &AdditiveSystem, part: &BlockPartition, range: &RangeSpec) -> Result<CountResult> {
    let prof = derive_profile(sys);
    part.validate(&prof, sys.s())?;
    if !part.b0.is_empty() {
        return Err(Error::invalid(format!(
            "the excess block must be empty here, it holds {} variables",
            part.b0.len()
        )));
    }
    let restricted = sys.select_columns(&part.blocked_vars())?;
    count_solutions(&restricted, range, Method::Mitm)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockBoundPoint {
    #[serde(rename = "P")]
    pub p: u64,
    pub i_count: u128,
    /// `J_{u_h,k_h}` per level
    pub j_counts: Vec<u128>,
    /// `log I - sum_h (mu_h - mu_{h+1}) log J_h`
    pub log_gap: f64,
}

/// Compares `I` with the product of the simpler mean values over a ladder of
/// `P`. The constant is unknown, so this only reports whether the log gap
/// trends down.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockBoundDiagnostic {
    pub points: Vec<BlockBoundPoint>,
    pub slope: Option<f64>,
    pub non_increasing: bool,
}

pub fn block_bound_diagnostic(
    sys: &AdditiveSystem,
    part: &BlockPartition,
    range: &RangeSpec,
    ps: &[u64],
) -> Result<BlockBoundDiagnostic> {
    let prof = derive_profile(sys);
    let mut points = Vec::with_capacity(ps.len());
    for &p in ps {
        let r = range.with_p(p);
        let i_count = mean_value_I(sys, part, &r)?.count;
        let mut j_counts = Vec::with_capacity(prof.t);
        let mut log_gap = (i_count as f64).ln();
        for h in 0..prof.t {
            let j = mean_value_J(part.u[h], &prof.degree_set(h), &r)?.count;
            log_gap -= (prof.mu[h] - prof.mu_next(h)) as f64 * (j as f64).ln();
            j_counts.push(j);
        }
        points.push(BlockBoundPoint {
            p,
            i_count,
            j_counts,
            log_gap,
        });
    }
    let pairs: Vec<(f64, f64)> = points
        .iter()
        .filter(|pt| pt.log_gap.is_finite())
        .map(|pt| ((pt.p as f64).ln(), pt.log_gap))
        .collect();
    let slope = super::fit::least_squares(&pairs).map(|f| f.slope);
    Ok(BlockBoundDiagnostic {
        non_increasing: slope.is_some_and(|s| s <= 1e-9),
        points,
        slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::solve::count_over;
    use crate::system::parse_system;

    #[test]
    fn j_one_is_diagonal() {
        for k in 1..=4 {
            assert_eq!(mean_value_J(1, &[k], &RangeSpec::full(13)).unwrap().count, 13);
        }
        assert_eq!(mean_value_J(1, &[1, 2], &RangeSpec::full(9)).unwrap().count, 9);
    }

    #[test]
    fn j_two_two_matches_brute_force() {
        let sys = parse_system("2: 1 1 -1 -1").unwrap();
        for p in [1u64, 5, 12, 30] {
            let xs: Vec<u64> = (1..=p).collect();
            let expect = count_over(&sys, &xs, Method::Brute).unwrap();
            assert_eq!(mean_value_J(2, &[2], &RangeSpec::full(p)).unwrap().count, expect);
        }
    }

    #[test]
    fn exponent_order_irrelevant() {
        let r = RangeSpec::full(7);
        let a = mean_value_J(3, &[2, 3], &r).unwrap();
        let b = mean_value_J(3, &[3, 2], &r).unwrap();
        assert_eq!(a.count, b.count);
        assert_eq!(a.system_digest, b.system_digest);
    }

    #[test]
    fn partition_shapes() {
        let sys = parse_system("3: 1 1 1 1 1 1 1\n3: 1 2 3 4 5 6 7\n2: 1 1 1 1 1 1 1").unwrap();
        let prof = derive_profile(&sys);
        let part = BlockPartition::sequential(&prof, &[1, 2], 7).unwrap();
        // mu = (2, 1): one block of size 2 at level 1, one of size 4 at level 2
        assert_eq!(part.s0, 3);
        assert_eq!(part.blocks.len(), 2);
        assert_eq!(part.b0, vec![6]);
        part.validate(&prof, 7).unwrap();
        assert!(BlockPartition::sequential(&prof, &[2, 2], 7).is_err());
    }

    #[test]
    fn i_at_p_one() {
        let sys = parse_system("2: 1 1 -1 -1\n3: 1 -1 2 -2").unwrap();
        let prof = derive_profile(&sys);
        let part = BlockPartition::sequential(&prof, &[2], 4).unwrap();
        assert_eq!(mean_value_I(&sys, &part, &RangeSpec::full(1)).unwrap().count, 1);
        let sys = parse_system("2: 1 1 -1 1").unwrap();
        let part = BlockPartition::sequential(&derive_profile(&sys), &[2], 4).unwrap();
        assert_eq!(mean_value_I(&sys, &part, &RangeSpec::full(1)).unwrap().count, 0);
    }

    #[test]
    fn i_rejects_excess_variables() {
        let sys = parse_system("2: 1 1 -1 -1 1").unwrap();
        let part = BlockPartition::sequential(&derive_profile(&sys), &[2], 5).unwrap();
        assert!(mean_value_I(&sys, &part, &RangeSpec::full(3)).is_err());
    }
}
