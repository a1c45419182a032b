//! Exact rational helpers for budgets and noise rates.

use num_rational::Ratio;
use std::fmt;
use std::str::FromStr;

/// A non-negative rational such as `1/5` or `0.05`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Frac(Ratio<u64>);

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("cannot parse `{0}` as a rational number")]
pub struct FracParseError(pub String);

impl Frac {
    pub const ZERO: Frac = Frac(Ratio::new_raw(0, 1));
    pub const ONE: Frac = Frac(Ratio::new_raw(1, 1));

    pub fn new(numer: u64, denom: u64) -> Self {
        assert!(denom != 0, "zero denominator");
        Frac(Ratio::new(numer, denom))
    }

    pub fn numer(&self) -> u64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u64 {
        *self.0.denom()
    }

    /// `floor(self * n)`.
    pub fn floor_mul(&self, n: u64) -> u64 {
        ((self.numer() as u128 * n as u128) / self.denom() as u128) as u64
    }

    /// `ceil(n / self)`; panics on zero.
    pub fn ceil_div_into(&self, n: u64) -> u64 {
        assert!(self.numer() != 0, "division by zero rate");
        let num = n as u128 * self.denom() as u128;
        let d = self.numer() as u128;
        num.div_ceil(d) as u64
    }

    /// `1/5 - k*self`, or `None` when negative.
    pub fn fifth_minus(&self, k: u64) -> Option<Frac> {
        let fifth = Ratio::new(1u64, 5);
        let sub = self.0 * Ratio::from_integer(k);
        if sub > fifth {
            None
        } else {
            Some(Frac(fifth - sub))
        }
    }

    pub fn checked_sub(&self, other: Frac) -> Option<Frac> {
        (self.0 >= other.0).then(|| Frac(self.0 - other.0))
    }

    pub fn to_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }
}

impl fmt::Debug for Frac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Frac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl FromStr for Frac {
    type Err = FracParseError;

    /// Accepts `3/20`, `0.15`, `1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || FracParseError(s.to_string());
        let t = s.trim();
        if let Some((a, b)) = t.split_once('/') {
            let a: u64 = a.trim().parse().map_err(|_| err())?;
            let b: u64 = b.trim().parse().map_err(|_| err())?;
            if b == 0 {
                return Err(err());
            }
            return Ok(Frac::new(a, b));
        }
        let (int, frac) = t.split_once('.').unwrap_or((t, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(err());
        }
        if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(err());
        }
        if frac.len() > 18 {
            return Err(err());
        }
        let denom = 10u64.pow(frac.len() as u32);
        let int_v: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| err())? };
        let frac_v: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| err())? };
        let numer = int_v.checked_mul(denom).and_then(|v| v.checked_add(frac_v)).ok_or_else(err)?;
        Ok(Frac::new(numer, denom))
    }
}

impl serde::Serialize for Frac {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Frac {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::String(s) => s.parse().map_err(serde::de::Error::custom),
            serde_json::Value::Number(n) => n.to_string().parse().map_err(serde::de::Error::custom),
            other => Err(serde::de::Error::custom(format!("expected rational, got {other}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!("0.05".parse::<Frac>().unwrap(), Frac::new(1, 20));
        assert_eq!("0.1".parse::<Frac>().unwrap(), Frac::new(1, 10));
        assert_eq!("3/15".parse::<Frac>().unwrap(), Frac::new(1, 5));
        assert_eq!("1".parse::<Frac>().unwrap(), Frac::ONE);
        assert!("x".parse::<Frac>().is_err());
        assert!("1/0".parse::<Frac>().is_err());
    }

    #[test]
    fn floor_and_ceil() {
        let eps = Frac::new(1, 20);
        assert_eq!(eps.ceil_div_into(4), 80);
        assert_eq!(eps.ceil_div_into(3), 60);
        assert_eq!(Frac::new(1, 10).ceil_div_into(7), 70);
        assert_eq!(Frac::new(3, 7).ceil_div_into(2), 5);
        let b = eps.fifth_minus(2).unwrap();
        assert_eq!(b, Frac::new(1, 10));
        assert_eq!(b.floor_mul(120), 12);
        assert_eq!(Frac::new(1, 5).floor_mul(9), 1);
        assert!(Frac::new(1, 8).fifth_minus(2).is_none());
    }

    #[test]
    fn serde_round_trip() {
        let f = Frac::new(3, 20);
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, "\"3/20\"");
        let back: Frac = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        let num: Frac = serde_json::from_str("0.25").unwrap();
        assert_eq!(num, Frac::new(1, 4));
    }
}
