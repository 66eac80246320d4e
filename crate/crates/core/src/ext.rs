//! Non-negative extended reals: a finite value or a symbolic infinity.

use std::cmp::Ordering;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A value in `[0, ∞]`. Infinity is a flag, never a float sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtNonNeg {
    Finite(f64),
    Infinite,
}

pub use ExtNonNeg::{Finite, Infinite};

impl ExtNonNeg {
    pub const ZERO: ExtNonNeg = Finite(0.0);

    /// Checked constructor for finite values.
    pub fn new(x: f64) -> Result<Self> {
        if x.is_finite() && x >= 0.0 {
            Ok(Finite(x))
        } else {
            Err(Error::input(format!(
                "expected a finite non-negative number, got {x}"
            )))
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Infinite)
    }

    pub fn is_zero(self) -> bool {
        matches!(self, Finite(x) if x == 0.0)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Finite(x) => Some(x),
            Infinite => None,
        }
    }

    /// `min(self, x)` for a finite `x`.
    pub fn min_f64(self, x: f64) -> f64 {
        match self {
            Finite(v) => v.min(x),
            Infinite => x,
        }
    }

    /// Whether `x <= self`.
    pub fn ge_f64(self, x: f64) -> bool {
        match self {
            Finite(v) => x <= v,
            Infinite => true,
        }
    }

    /// `self * k` for `k >= 0`, with `∞ * 0 = 0`.
    pub fn scale(self, k: f64) -> ExtNonNeg {
        match self {
            Finite(v) => Finite(v * k),
            Infinite if k == 0.0 => Finite(0.0),
            Infinite => Infinite,
        }
    }

    /// Lossy conversion for display and for comparisons only.
    pub fn to_f64(self) -> f64 {
        match self {
            Finite(v) => v,
            Infinite => f64::INFINITY,
        }
    }
}

impl PartialOrd for ExtNonNeg {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Finite(a), Finite(b)) => a.partial_cmp(b),
            (Finite(_), Infinite) => Some(Ordering::Less),
            (Infinite, Finite(_)) => Some(Ordering::Greater),
            (Infinite, Infinite) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for ExtNonNeg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finite(v) => write!(f, "{v}"),
            Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for ExtNonNeg {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Finite(v) => s.serialize_f64(*v),
            Infinite => s.serialize_str("inf"),
        }
    }
}

struct ExtVisitor;

impl<'de> Visitor<'de> for ExtVisitor {
    type Value = ExtNonNeg;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a non-negative number or the string \"inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ExtNonNeg, E> {
        ExtNonNeg::new(v).map_err(|_| E::custom(format!("{v} is not a finite non-negative number")))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtNonNeg, E> {
        Ok(Finite(v as f64))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtNonNeg, E> {
        self.visit_f64(v as f64)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtNonNeg, E> {
        if v == "inf" {
            Ok(Infinite)
        } else {
            Err(E::custom(format!(
                "unknown string {v:?}; infinity must be spelled \"inf\""
            )))
        }
    }
}

impl<'de> Deserialize<'de> for ExtNonNeg {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        d.deserialize_any(ExtVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_puts_infinity_on_top() {
        assert!(Finite(1e300) < Infinite);
        assert!(Finite(0.0) < Finite(1.0));
        assert_eq!(Infinite.partial_cmp(&Infinite), Some(Ordering::Equal));
    }

    #[test]
    fn scale_by_zero_of_infinity_is_zero() {
        assert_eq!(Infinite.scale(0.0), Finite(0.0));
        assert_eq!(Infinite.scale(2.0), Infinite);
        assert_eq!(Finite(1.5).scale(2.0), Finite(3.0));
    }

    #[test]
    fn rejects_negative_and_nan() {
        assert!(ExtNonNeg::new(-1.0).is_err());
        assert!(ExtNonNeg::new(f64::NAN).is_err());
        assert!(ExtNonNeg::new(f64::INFINITY).is_err());
    }
}

/// Serde adapter for `f64` fields that may be `±inf`, written as the strings
/// `"inf"` and `"-inf"` so that JSON output stays valid and round-trips.
pub mod extended_f64 {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *x == f64::INFINITY {
            s.serialize_str("inf")
        } else if *x == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*x)
        }
    }

    struct V;

    impl<'de> Visitor<'de> for V {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number, \"inf\" or \"-inf\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(E::custom(format!("unexpected string {v:?}"))),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(V)
    }
}
