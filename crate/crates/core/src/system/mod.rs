//! Diagonal systems `sum_j c_ij x_j^{d_i} = 0`, their degree profile and the
//! highly non-singular condition.

mod nonsingular;
mod parse;
mod profile;

pub use nonsingular::{
    bareiss_determinant, check_highly_nonsingular, CheckMode, MinorWitness, NonSingularityReport,
    DEFAULT_MINOR_BUDGET,
};
pub use parse::parse_system;
pub use profile::{derive_profile, DegreeProfile};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A system of `r` additive forms in `s` variables.
///
/// Rows are kept sorted by degree, largest first. The sort is stable and the
/// original position of every row is remembered in `input_order`. Equality
/// compares the sorted rows only.
#[derive(Clone, Debug)]
pub struct AdditiveSystem {
    degrees: Vec<u32>,
    coeffs: Vec<Vec<i64>>,
    input_order: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct SystemJson {
    degrees: Vec<u32>,
    coeffs: Vec<Vec<i64>>,
}

impl AdditiveSystem {
    /// Builds a system from rows given in any order.
    pub fn new(degrees: Vec<u32>, coeffs: Vec<Vec<i64>>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::invalid("a system needs at least one equation"));
        }
        if degrees.len() != coeffs.len() {
            return Err(Error::invalid(format!(
                "{} degrees but {} coefficient rows",
                degrees.len(),
                coeffs.len()
            )));
        }
        let s = coeffs[0].len();
        if s == 0 {
            return Err(Error::invalid("a system needs at least one variable"));
        }
        for (i, (row, &d)) in coeffs.iter().zip(&degrees).enumerate() {
            if d == 0 {
                return Err(Error::invalid(format!(
                    "non-positive degree in equation {}",
                    i + 1
                )));
            }
            if row.len() != s {
                return Err(Error::invalid(format!(
                    "equation {} has {} coefficients, expected {}",
                    i + 1,
                    row.len(),
                    s
                )));
            }
            if let Some(j) = row.iter().position(|&c| c == 0) {
                return Err(Error::invalid(format!(
                    "zero coefficient at ({},{})",
                    i + 1,
                    j + 1
                )));
            }
        }
        let mut order: Vec<usize> = (0..degrees.len()).collect();
        order.sort_by(|&a, &b| degrees[b].cmp(&degrees[a]));
        let sys = AdditiveSystem {
            degrees: order.iter().map(|&i| degrees[i]).collect(),
            coeffs: order.iter().map(|&i| coeffs[i].clone()).collect(),
            input_order: order,
        };
        for w in sys.caveats() {
            log::warn!("{w}");
        }
        Ok(sys)
    }

    pub fn s(&self) -> usize {
        self.coeffs[0].len()
    }

    pub fn r(&self) -> usize {
        self.degrees.len()
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn coeffs(&self) -> &[Vec<i64>] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize, j: usize) -> i64 {
        self.coeffs[i][j]
    }

    /// `input_order()[i]` is the position row `i` had in the input.
    pub fn input_order(&self) -> &[usize] {
        &self.input_order
    }

    pub fn max_degree(&self) -> u32 {
        self.degrees[0]
    }

    pub fn max_abs_coeff(&self) -> u64 {
        self.coeffs
            .iter()
            .flatten()
            .map(|c| c.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    /// Total degree `K = d_1 + ... + d_r`.
    pub fn total_degree(&self) -> u64 {
        self.degrees.iter().map(|&d| d as u64).sum()
    }

    pub fn caveats(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.degrees.contains(&1) {
            out.push(
                "system contains linear equations (degree 1); the headline bounds assume degree >= 2"
                    .to_string(),
            );
        }
        out
    }

    /// Evaluates every form at `x`, in row order.
    pub fn evaluate(&self, x: &[i128]) -> Option<Vec<i128>> {
        self.coeffs
            .iter()
            .zip(&self.degrees)
            .map(|(row, &d)| {
                row.iter().zip(x).try_fold(0i128, |acc, (&c, &xj)| {
                    let t = xj.checked_pow(d)?.checked_mul(c as i128)?;
                    acc.checked_add(t)
                })
            })
            .collect()
    }

    /// Keeps only the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if cols.is_empty() {
            return Err(Error::invalid("column selection is empty"));
        }
        if let Some(&bad) = cols.iter().find(|&&j| j >= self.s()) {
            return Err(Error::invalid(format!("column {bad} out of range")));
        }
        Ok(AdditiveSystem {
            degrees: self.degrees.clone(),
            coeffs: self
                .coeffs
                .iter()
                .map(|row| cols.iter().map(|&j| row[j]).collect())
                .collect(),
            input_order: self.input_order.clone(),
        })
    }

    /// Multiplies equation `i` by a nonzero integer.
    pub fn scale_row(&self, i: usize, factor: i64) -> Result<Self> {
        if factor == 0 {
            return Err(Error::invalid("scale factor must be nonzero"));
        }
        let mut out = self.clone();
        for c in &mut out.coeffs[i] {
            *c = c
                .checked_mul(factor)
                .ok_or_else(|| Error::Overflow(format!("scaling row {i} by {factor}")))?;
        }
        Ok(out)
    }

    /// Canonical text form: header `r | s` followed by one line per equation.
    pub fn to_canonical_text(&self) -> String {
        let mut out = format!("{} | {}\n", self.r(), self.s());
        for (d, row) in self.degrees.iter().zip(&self.coeffs) {
            let cs: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            out.push_str(&format!("{}: {}\n", d, cs.join(" ")));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SystemJson {
            degrees: self.degrees.clone(),
            coeffs: self.coeffs.clone(),
        })
        .expect("plain integer arrays always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let js: SystemJson = serde_json::from_str(text)?;
        AdditiveSystem::new(js.degrees, js.coeffs)
    }

    /// Hex SHA-256 of the canonical text form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_canonical_text().as_bytes()))
    }
}

impl PartialEq for AdditiveSystem {
    fn eq(&self, other: &Self) -> bool {
        self.degrees == other.degrees && self.coeffs == other.coeffs
    }
}

impl Eq for AdditiveSystem {}

impl Serialize for AdditiveSystem {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        SystemJson {
            degrees: self.degrees.clone(),
            coeffs: self.coeffs.clone(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for AdditiveSystem {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let js = SystemJson::deserialize(de)?;
        AdditiveSystem::new(js.degrees, js.coeffs).map_err(serde::de::Error::custom)
    }
}

impl std::fmt::Display for AdditiveSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_canonical_text())
    }
}
