//! Exact rational arithmetic helpers.
//!
//! Values are arbitrary-precision fractions kept in lowest terms with a
//! positive denominator (`num_rational::BigRational` guarantees both). No
//! floating point enters any value computation; floats appear only in
//! diagnostics that involve roots of unity.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Rational = num_rational::BigRational;

/// Shorthand constructor from machine integers.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(num: i64) -> Rational {
    Rational::from(BigInt::from(num))
}

pub fn rat_usize(num: usize) -> Rational {
    Rational::from(BigInt::from(num))
}

/// Least common multiple of the denominators of the given values.
pub fn lcm_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    let mut acc = BigInt::one();
    for v in values {
        acc = acc.lcm(v.denom());
    }
    acc
}

pub fn to_f64(v: &Rational) -> f64 {
    v.to_f64().unwrap_or_else(|| {
        // Fall back on a scaled division for pathological magnitudes.
        let scale = BigInt::from(1u64 << 53);
        let scaled = (v.numer() * &scale) / v.denom();
        scaled.to_f64().unwrap_or(f64::NAN) / scale.to_f64().unwrap()
    })
}

/// Renders `n/d` in lowest terms (just `n` for integers).
pub fn display(v: &Rational) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

/// Parses either `n` or `n/d`.
pub fn parse(text: &str) -> Result<Rational, String> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| format!("bad numerator in {text:?}"))?;
    let den: BigInt = den.parse().map_err(|_| format!("bad denominator in {text:?}"))?;
    if den.is_zero() {
        return Err(format!("zero denominator in {text:?}"));
    }
    Ok(Rational::new(num, den))
}

/// Serde representation: numerator/denominator as decimal strings, so JSON
/// output never loses precision to floats.
#[derive(Serialize, Deserialize)]
struct RatioRepr {
    num: String,
    den: String,
}

pub fn serialize<S: Serializer>(v: &Rational, s: S) -> Result<S::Ok, S::Error> {
    RatioRepr { num: v.numer().to_string(), den: v.denom().to_string() }.serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
    let repr = RatioRepr::deserialize(d)?;
    let num: BigInt = repr.num.parse().map_err(|_| DeError::custom("bad numerator"))?;
    let den: BigInt = repr.den.parse().map_err(|_| DeError::custom("bad denominator"))?;
    if den.is_zero() {
        return Err(DeError::custom("zero denominator"));
    }
    Ok(Rational::new(num, den))
}

/// Serde adapters for `Vec<Rational>` fields.
pub mod vec_serde {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let repr: Vec<RatioRepr> = v
            .iter()
            .map(|x| RatioRepr { num: x.numer().to_string(), den: x.denom().to_string() })
            .collect();
        repr.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let repr: Vec<RatioRepr> = Vec::deserialize(d)?;
        repr.into_iter()
            .map(|r| {
                let num: BigInt = r.num.parse().map_err(|_| DeError::custom("bad numerator"))?;
                let den: BigInt = r.den.parse().map_err(|_| DeError::custom("bad denominator"))?;
                if den.is_zero() {
                    return Err(DeError::custom("zero denominator"));
                }
                Ok(Rational::new(num, den))
            })
            .collect()
    }
}

/// Serde adapters for `Vec<Vec<Rational>>` fields.
pub mod vec2_serde {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Vec<Rational>], s: S) -> Result<S::Ok, S::Error> {
        let repr: Vec<Vec<RatioRepr>> = v
            .iter()
            .map(|row| {
                row.iter()
                    .map(|x| RatioRepr { num: x.numer().to_string(), den: x.denom().to_string() })
                    .collect()
            })
            .collect();
        repr.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Rational>>, D::Error> {
        let repr: Vec<Vec<RatioRepr>> = Vec::deserialize(d)?;
        repr.into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|r| {
                        let num: BigInt =
                            r.num.parse().map_err(|_| DeError::custom("bad numerator"))?;
                        let den: BigInt =
                            r.den.parse().map_err(|_| DeError::custom("bad denominator"))?;
                        if den.is_zero() {
                            return Err(DeError::custom("zero denominator"));
                        }
                        Ok(Rational::new(num, den))
                    })
                    .collect()
            })
            .collect()
    }
}

/// Ceiling of a positive rational as u64.
pub fn ceil_u64(v: &Rational) -> u64 {
    assert!(!v.is_negative(), "ceil_u64 of negative value");
    v.ceil().numer().to_u64().expect("ceiling fits in u64")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_and_parse_round_trip() {
        for v in [rat(1, 3), rat(-7, 2), rat_int(5), rat(0, 9)] {
            assert_eq!(parse(&display(&v)).unwrap(), v);
        }
    }

    #[test]
    fn lcm_of_denominators() {
        let vals = [rat(1, 2), rat(1, 3), rat_int(4)];
        assert_eq!(lcm_denominators(vals.iter()), BigInt::from(6));
    }

    #[test]
    fn json_round_trip_is_exact() {
        #[derive(Serialize, Deserialize)]
        struct W(#[serde(with = "crate::ratio")] Rational);
        let v = W(rat(22, 7));
        let json = serde_json::to_string(&v).unwrap();
        let back: W = serde_json::from_str(&json).unwrap();
        assert_eq!(back.0, rat(22, 7));
    }
}
