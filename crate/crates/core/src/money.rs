//! Exact money amounts and exact probabilities.
//!
//! Amounts are held as integer cents so that step-function thresholds are
//! compared without floating-point error. Probabilities are `i64` rationals.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Prob = Rational64;

const CENTS_PER_EURO: u64 = 100;

/// A non-negative amount of money in integer cents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Money(u64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn from_cents(cents: u64) -> Self {
        Money(cents)
    }

    pub const fn from_euros(euros: u64) -> Self {
        Money(euros * CENTS_PER_EURO)
    }

    pub const fn cents(self) -> u64 {
        self.0
    }

    pub fn as_euros(self) -> f64 {
        self.0 as f64 / CENTS_PER_EURO as f64
    }

    /// Nearest multiple of `step` to a real euro amount; ties go to the
    /// smaller multiple. Negative inputs clamp to zero.
    pub fn round_to_grid(euros: f64, step: Money) -> Money {
        if !euros.is_finite() || euros <= 0.0 || step.0 == 0 {
            return Money::ZERO;
        }
        let steps = euros * CENTS_PER_EURO as f64 / step.0 as f64;
        let lower = steps.floor();
        let k = if steps - lower > 0.5 { lower + 1.0 } else { lower };
        Money(k as u64 * step.0)
    }

    pub fn checked_sub(self, other: Money) -> Option<Money> {
        self.0.checked_sub(other.0).map(Money)
    }

    pub fn is_multiple_of(self, step: Money) -> bool {
        step.0 != 0 && self.0.is_multiple_of(step.0)
    }

    /// Number of `step`s in `self`; `self` must be a multiple of `step`.
    pub fn steps_of(self, step: Money) -> usize {
        (self.0 / step.0) as usize
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0.checked_sub(rhs.0).expect("money subtraction underflow"))
    }
}

impl Mul<u64> for Money {
    type Output = Money;
    fn mul(self, rhs: u64) -> Money {
        Money(self.0 * rhs)
    }
}

impl std::iter::Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, Add::add)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / CENTS_PER_EURO, self.0 % CENTS_PER_EURO)
    }
}

impl FromStr for Money {
    type Err = Error;

    /// Parses `"5"`, `"5.0"`, `"9.99"`. More than two decimals is rejected
    /// unless the extra digits are zero.
    fn from_str(s: &str) -> Result<Money> {
        let s = s.trim();
        let bad = || Error::invalid(format!("`{s}` is not a non-negative money amount"));
        let (int, frac) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let euros: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let (head, tail) = frac.split_at(frac.len().min(2));
        if tail.chars().any(|c| c != '0') {
            return Err(Error::invalid(format!("`{s}` has sub-cent precision")));
        }
        let mut cents: u64 = if head.is_empty() { 0 } else { head.parse().map_err(|_| bad())? };
        if head.len() == 1 {
            cents *= 10;
        }
        euros.checked_mul(CENTS_PER_EURO).and_then(|c| c.checked_add(cents)).map(Money).ok_or_else(bad)
    }
}

impl Serialize for Money {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Money, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Int(u64),
            Float(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::Int(e) => Ok(Money::from_euros(e)),
            Raw::Float(x) => format!("{x}").parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Parses a probability written as a decimal (`"0.9"`) or a fraction (`"1/3"`).
pub fn parse_prob(s: &str) -> Result<Prob> {
    let s = s.trim();
    let r = parse_rational(s)?;
    if r.is_negative() || r > Prob::one() {
        return Err(Error::invalid(format!("probability `{s}` outside [0, 1]")));
    }
    Ok(r)
}

/// Parses a non-negative exact rational from decimal or `a/b` notation.
pub fn parse_rational(s: &str) -> Result<Rational64> {
    let s = s.trim();
    let bad = || Error::invalid(format!("`{s}` is not an exact decimal or fraction"));
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Rational64::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if (int.is_empty() && frac.is_empty())
        || !int.chars().all(|c| c.is_ascii_digit())
        || !frac.chars().all(|c| c.is_ascii_digit())
        || frac.len() > 15
    {
        return Err(bad());
    }
    let denom = 10i64.pow(frac.len() as u32);
    let int_part: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
    let frac_part: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    let num = int_part.checked_mul(denom).and_then(|v| v.checked_add(frac_part)).ok_or_else(bad)?;
    let r = Rational64::new(num, denom);
    Ok(if neg { -r } else { r })
}

/// Formats a rational as a terminating decimal when one exists, otherwise as
/// `a/b`. Round-trips through [`parse_rational`].
pub fn format_rational(r: &Rational64) -> String {
    let (n, d) = (*r.numer(), *r.denom());
    let mut rest = d;
    let (mut twos, mut fives) = (0u32, 0u32);
    while rest % 2 == 0 {
        rest /= 2;
        twos += 1;
    }
    while rest % 5 == 0 {
        rest /= 5;
        fives += 1;
    }
    if rest != 1 {
        return format!("{n}/{d}");
    }
    let digits = twos.max(fives);
    if digits == 0 {
        return n.to_string();
    }
    let scale = 10i128.pow(digits);
    let scaled = n as i128 * (scale / d as i128);
    let sign = if scaled < 0 { "-" } else { "" };
    let a = scaled.abs();
    format!("{sign}{}.{:0width$}", a / scale, a % scale, width = digits as usize)
}

pub fn prob_to_f64(p: &Prob) -> f64 {
    p.to_f64().unwrap_or(f64::NAN)
}

pub(crate) fn is_unit_interval(p: &Prob) -> bool {
    !p.is_negative() && *p <= Prob::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_prints_euro_strings() {
        assert_eq!("5".parse::<Money>().unwrap(), Money::from_euros(5));
        assert_eq!("9.99".parse::<Money>().unwrap(), Money::from_cents(999));
        assert_eq!("0.5".parse::<Money>().unwrap(), Money::from_cents(50));
        assert_eq!("1.250".parse::<Money>().unwrap(), Money::from_cents(125));
        assert_eq!(Money::from_cents(999).to_string(), "9.99");
        assert_eq!(Money::from_euros(10).to_string(), "10.00");
        assert!("1.234".parse::<Money>().is_err());
        assert!("-1".parse::<Money>().is_err());
        assert!("abc".parse::<Money>().is_err());
        assert!(".".parse::<Money>().is_err());
    }

    #[test]
    fn grid_rounding_breaks_ties_downward() {
        let euro = Money::from_euros(1);
        assert_eq!(Money::round_to_grid(2.5, euro), Money::from_euros(2));
        assert_eq!(Money::round_to_grid(2.51, euro), Money::from_euros(3));
        assert_eq!(Money::round_to_grid(1.49, euro), Money::from_euros(1));
        assert_eq!(Money::round_to_grid(-0.7, euro), Money::ZERO);
        assert_eq!(Money::round_to_grid(0.26, Money::from_cents(50)), Money::from_cents(50));
    }

    #[test]
    fn rationals_round_trip_through_text() {
        for s in ["0.9", "0.1", "1/3", "0", "1", "0.125", "2/7"] {
            let r = parse_rational(s).unwrap();
            assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r, "{s}");
        }
        assert_eq!(format_rational(&Rational64::new(1, 2)), "0.5");
        assert_eq!(format_rational(&Rational64::new(9, 10)), "0.9");
        assert_eq!(format_rational(&Rational64::new(1, 3)), "1/3");
        assert_eq!(parse_prob("0.8").unwrap(), Rational64::new(4, 5));
        assert!(parse_prob("1.2").is_err());
        assert!(parse_prob("-0.1").is_err());
    }

    #[test]
    fn money_serde_accepts_strings_and_numbers() {
        let m: Money = serde_json::from_str("\"0.25\"").unwrap();
        assert_eq!(m, Money::from_cents(25));
        let m: Money = serde_json::from_str("5").unwrap();
        assert_eq!(m, Money::from_euros(5));
        let m: Money = serde_json::from_str("0.5").unwrap();
        assert_eq!(m, Money::from_cents(50));
        assert_eq!(serde_json::to_string(&Money::from_cents(105)).unwrap(), "\"1.05\"");
    }
}
