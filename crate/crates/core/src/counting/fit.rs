use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square of the residuals.
    pub residual: f64,
}

pub(crate) fn least_squares(points: &[(f64, f64)]) -> Option<SlopeFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    Some(SlopeFit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
    })
}

/// Least-squares slope of `log count` against `log P`.
pub fn slope_estimate(counts: &[(u64, u128)]) -> Result<SlopeFit> {
    if counts.len() < 3 {
        return Err(Error::invalid("slope estimate needs at least three points"));
    }
    if counts.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::invalid("P values must be strictly increasing"));
    }
    if let Some((p, _)) = counts.iter().find(|c| c.1 == 0) {
        return Err(Error::invalid(format!("zero count at P = {p}")));
    }
    let pts: Vec<(f64, f64)> = counts
        .iter()
        .map(|&(p, c)| ((p as f64).ln(), (c as f64).ln()))
        .collect();
    least_squares(&pts).ok_or_else(|| Error::invalid("degenerate P values"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let fit = slope_estimate(&[(2, 8), (4, 64), (8, 512), (16, 4096)]).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn constant_is_flat() {
        let fit = slope_estimate(&[(2, 5), (3, 5), (9, 5)]).unwrap();
        assert!(fit.slope.abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(slope_estimate(&[(2, 1), (3, 0), (4, 1)]).is_err());
        assert!(slope_estimate(&[(2, 1), (3, 1)]).is_err());
        assert!(slope_estimate(&[(3, 1), (2, 1), (4, 1)]).is_err());
    }
}
