//! Exact arithmetic: finite fields, truncated Laurent series, the rings
//! `o/ϖ^m`, and Newton polygons.

pub mod fq;
pub mod local;
pub mod newton;
pub mod series;
pub mod trunc;

pub use fq::{FieldSpec, FieldSpecRepr, FqElement};
pub use local::{LocalFieldElement, LocalFieldElementRepr, LocalFieldSpec, Valuation, DEFAULT_PRECISION};
pub use newton::{NewtonPolygon, Segment};
pub use series::{Series, EXACT};
pub use trunc::{TruncElem, TruncRing};

/// Exact rational numbers, used for every normalized valuation.
pub type Rational = num_rational::Ratio<i64>;

/// `"a/b"`, or `"a"` for integers.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let bad = || format!("not a rational: {s:?}");
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => s.trim().parse::<i64>().map(Rational::from_integer).map_err(|_| bad()),
    }
}

/// Serde adapter writing rationals as `"a/b"` strings.
pub mod rational_str {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let raw = String::deserialize(d)?;
        super::parse_rational(&raw).map_err(serde::de::Error::custom)
    }
}
