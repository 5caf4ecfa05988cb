//! Exact numbers in JSON as decimal strings (`"123"`, `"-7/24"`).

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, Zero};

pub fn rat_to_string(x: &BigRational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn rat_from_str(s: &str) -> Option<BigRational> {
    match s.split_once('/') {
        Some((n, d)) => {
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n.trim().parse().ok()?, d))
        }
        None => Some(BigRational::from_integer(s.trim().parse().ok()?)),
    }
}

/// Decimal expansion of `x` truncated to `digits` places.
pub fn rat_to_decimal(x: &BigRational, digits: usize) -> String {
    let scale = BigInt::from(10u8).pow(digits as u32);
    let scaled = (x.numer().abs() * &scale) / x.denom();
    let mut body = scaled.to_string();
    if body.len() <= digits {
        body = format!("{}{}", "0".repeat(digits + 1 - body.len()), body);
    }
    let (int, frac) = body.split_at(body.len() - digits);
    let sign = if x.is_negative() { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

pub mod uint_vec {
    use super::*;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigUint], ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_seq(v.iter().map(|x| x.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<BigUint>, D::Error> {
        Vec::<String>::deserialize(de)?
            .iter()
            .map(|s| s.parse().map_err(D::Error::custom))
            .collect()
    }
}

pub mod rat_vec {
    use super::*;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigRational], ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_seq(v.iter().map(rat_to_string))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<BigRational>, D::Error> {
        Vec::<String>::deserialize(de)?
            .iter()
            .map(|s| rat_from_str(s).ok_or_else(|| D::Error::custom(format!("bad rational '{s}'"))))
            .collect()
    }
}

pub mod rat {
    use super::*;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigRational, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&rat_to_string(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(de)?;
        rat_from_str(&s).ok_or_else(|| D::Error::custom(format!("bad rational '{s}'")))
    }
}
