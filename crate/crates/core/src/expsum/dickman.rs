use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

/// Terms kept in each interval's power series.
const TERMS: usize = 90;
/// Intervals tabulated up front; larger arguments extend the table on demand.
const TABULATED: usize = 64;

/// Fixed-point fraction bits used while building the series. The constant
/// terms come from a cancelling difference, so f64 alone loses digits with
/// every interval.
const FRAC_BITS: u32 = 900;

/// Coefficients of `h_k(t) = rho(k + 1/2 + t)`, `|t| <= 1/2`, for `k = 0, 1, ...`.
///
/// From `u rho'(u) = -rho(u - 1)` one gets `(k + 1/2 + t) h_k'(t) = -h_{k-1}(t)`,
/// which fixes every coefficient except the constant one; continuity at
/// `u = k` (`h_k(-1/2) = h_{k-1}(1/2)`) supplies that.
fn series(upto: usize) -> Vec<[f64; TERMS]> {
    let mut prev = vec![BigInt::zero(); TERMS];
    prev[0] = BigInt::one() << FRAC_BITS;
    let mut out = vec![to_f64_array(&prev)];
    for k in 1..=upto {
        let mut a = vec![BigInt::zero(); TERMS];
        let twice_c = BigInt::from(2 * k + 1);
        for i in 0..TERMS - 1 {
            let num: BigInt = (&prev[i] + &a[i] * i) * 2;
            let den: BigInt = &twice_c * (i + 1);
            a[i + 1] = -(num / den);
        }
        // sum b_i 2^-i  and  sum_{i >= 1} a_i (-2)^-i
        let left: BigInt = prev.iter().enumerate().map(|(i, b)| b >> i).sum();
        let right: BigInt = a
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, x)| if i % 2 == 0 { x >> i } else { -(x >> i) })
            .sum();
        a[0] = left - right;
        out.push(to_f64_array(&a));
        prev = a;
    }
    out
}

fn to_f64_array(a: &[BigInt]) -> [f64; TERMS] {
    let mut out = [0.0; TERMS];
    for (o, x) in out.iter_mut().zip(a) {
        let shift = x.bits().saturating_sub(62);
        let top = (x >> shift).to_f64().unwrap_or(0.0);
        let e = shift as i32 - FRAC_BITS as i32;
        *o = top * 2f64.powi(e / 2) * 2f64.powi(e - e / 2);
    }
    out
}

fn table() -> &'static [[f64; TERMS]] {
    static TABLE: OnceLock<Vec<[f64; TERMS]>> = OnceLock::new();
    TABLE.get_or_init(|| series(TABULATED))
}

fn horner(a: &[f64; TERMS], t: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

/// Dickman's function: `rho = 1` on `[0, 1]`, `u rho'(u) = -rho(u - 1)` after.
///
/// Returns 1 for negative or NaN input.
pub fn dickman_rho(u: f64) -> f64 {
    if !(u > 1.0) {
        return 1.0;
    }
    if u.is_infinite() {
        return 0.0;
    }
    let k = (u.ceil() as usize).saturating_sub(1);
    let t = u - k as f64 - 0.5;
    let v = if k <= TABULATED {
        horner(&table()[k], t)
    } else {
        horner(&series(k)[k], t)
    };
    v.max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_intervals() {
        assert_eq!(dickman_rho(0.3), 1.0);
        assert_eq!(dickman_rho(1.0), 1.0);
        for u in [1.1, 1.5, 1.9, 2.0] {
            assert!((dickman_rho(u) - (1.0 - f64::ln(u))).abs() < 1e-12);
        }
        assert!((dickman_rho(2.0) - 0.306_852_819_440_054_7).abs() < 1e-12);
    }

    #[test]
    fn rho_three_by_independent_quadrature() {
        // rho(3) = rho(2) - int_2^3 (1 - ln(t - 1)) / t dt, composite Simpson
        let n = 200_000;
        let h = 1.0 / n as f64;
        let f = |t: f64| (1.0 - (t - 1.0).ln()) / t;
        let mut s = f(2.0) + f(3.0);
        for i in 1..n {
            let t = 2.0 + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(t);
        }
        let rho3 = (1.0 - 2f64.ln()) - s * h / 3.0;
        assert!((dickman_rho(3.0) - rho3).abs() < 1e-10, "{} {}", dickman_rho(3.0), rho3);
    }

    #[test]
    fn known_values() {
        // reference values from a 60-digit evaluation
        assert!((dickman_rho(4.0) / 4.910_925_647_761e-3 - 1.0).abs() < 1e-10);
        assert!((dickman_rho(5.0) / 3.547_247_004_560e-4 - 1.0).abs() < 1e-10);
        assert!((dickman_rho(8.0) / 3.232_069_304_226e-8 - 1.0).abs() < 1e-10);
        assert!((dickman_rho(10.0) / 2.770_171_837_726e-11 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn monotone_positive_lipschitz() {
        let mut prev = dickman_rho(0.0);
        for i in 1..=5000 {
            let u = i as f64 * 1e-3;
            let v = dickman_rho(u);
            assert!(v > 0.0 && v <= prev + 1e-15);
            assert!(prev - v <= 1e-3 + 1e-12);
            prev = v;
        }
        assert!(dickman_rho(80.0) > 0.0);
    }
}
