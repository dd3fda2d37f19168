//! Integer-nanosecond time values.
//!
//! All scan, buffer and pipeline arithmetic runs on [`Nanos`] so that results
//! are exact and reproducible across platforms. Floating point only appears at
//! the reporting edge (`as_ms`).

use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const NANOS_PER_MS: i64 = 1_000_000;

/// A signed time or duration in nanoseconds.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Nanos(pub i64);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseMillisError {
    #[error("`{0}` is not a decimal millisecond value")]
    Syntax(String),
    #[error("`{0}` has more precision than one nanosecond")]
    SubNanosecond(String),
    #[error("`{0}` is out of range")]
    Overflow(String),
}

impl Nanos {
    pub const ZERO: Nanos = Nanos(0);

    pub const fn new(ns: i64) -> Self {
        Nanos(ns)
    }

    pub const fn from_micros(us: i64) -> Self {
        Nanos(us * 1_000)
    }

    pub const fn from_millis(ms: i64) -> Self {
        Nanos(ms * NANOS_PER_MS)
    }

    pub const fn get(self) -> i64 {
        self.0
    }

    pub fn as_ms(self) -> f64 {
        self.0 as f64 / NANOS_PER_MS as f64
    }

    pub fn abs(self) -> Self {
        Nanos(self.0.abs())
    }

    /// Floor of half this duration, the convention used for every
    /// integration-window midpoint.
    pub const fn half(self) -> Self {
        Nanos(self.0.div_euclid(2))
    }

    /// Parses a decimal millisecond literal such as `13.888889` or `-0.4`
    /// exactly. More than six fractional digits must be trailing zeros.
    pub fn parse_ms(text: &str) -> Result<Self, ParseMillisError> {
        let s = text.trim();
        let syntax = || ParseMillisError::Syntax(text.to_string());
        let (negative, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(syntax());
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(syntax());
        }
        let (kept, dropped) = frac_part.split_at(frac_part.len().min(6));
        if dropped.bytes().any(|b| b != b'0') {
            return Err(ParseMillisError::SubNanosecond(text.to_string()));
        }
        let overflow = || ParseMillisError::Overflow(text.to_string());
        let whole: i64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| overflow())?
        };
        let mut frac: i64 = if kept.is_empty() { 0 } else { kept.parse().map_err(|_| syntax())? };
        for _ in kept.len()..6 {
            frac *= 10;
        }
        let magnitude = whole
            .checked_mul(NANOS_PER_MS)
            .and_then(|w| w.checked_add(frac))
            .ok_or_else(overflow)?;
        Ok(Nanos(if negative { -magnitude } else { magnitude }))
    }

    /// Converts an `f64` millisecond value through its shortest decimal
    /// representation, so a literal like `13.888889` maps to exactly
    /// 13 888 889 ns.
    pub fn from_ms_f64(ms: f64) -> Result<Self, ParseMillisError> {
        if !ms.is_finite() {
            return Err(ParseMillisError::Syntax(ms.to_string()));
        }
        Self::parse_ms(&format!("{ms}"))
    }

    /// Nearest-nanosecond conversion for computed (non-literal) values.
    pub fn from_ms_rounded(ms: f64) -> Self {
        Nanos((ms * NANOS_PER_MS as f64).round() as i64)
    }
}

impl fmt::Display for Nanos {
    /// Exact decimal milliseconds with trailing zeros trimmed.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let mag = self.0.unsigned_abs();
        let whole = mag / NANOS_PER_MS as u64;
        let frac = mag % NANOS_PER_MS as u64;
        if frac == 0 {
            write!(f, "{sign}{whole}")
        } else {
            let digits = format!("{frac:06}");
            write!(f, "{sign}{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl Add for Nanos {
    type Output = Nanos;
    fn add(self, rhs: Nanos) -> Nanos {
        Nanos(self.0 + rhs.0)
    }
}

impl AddAssign for Nanos {
    fn add_assign(&mut self, rhs: Nanos) {
        self.0 += rhs.0;
    }
}

impl Sub for Nanos {
    type Output = Nanos;
    fn sub(self, rhs: Nanos) -> Nanos {
        Nanos(self.0 - rhs.0)
    }
}

impl SubAssign for Nanos {
    fn sub_assign(&mut self, rhs: Nanos) {
        self.0 -= rhs.0;
    }
}

impl Neg for Nanos {
    type Output = Nanos;
    fn neg(self) -> Nanos {
        Nanos(-self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimal_milliseconds_exactly() {
        assert_eq!(Nanos::parse_ms("13.888889").unwrap(), Nanos(13_888_889));
        assert_eq!(Nanos::parse_ms("-0.4").unwrap(), Nanos(-400_000));
        assert_eq!(Nanos::parse_ms("1").unwrap(), Nanos(1_000_000));
        assert_eq!(Nanos::parse_ms(".5").unwrap(), Nanos(500_000));
        assert_eq!(Nanos::parse_ms("0.0000010").unwrap(), Nanos(1));
    }

    #[test]
    fn rejects_sub_nanosecond_and_garbage() {
        assert!(matches!(
            Nanos::parse_ms("0.0000001"),
            Err(ParseMillisError::SubNanosecond(_))
        ));
        assert!(matches!(Nanos::parse_ms("1e3"), Err(ParseMillisError::Syntax(_))));
        assert!(matches!(Nanos::parse_ms("."), Err(ParseMillisError::Syntax(_))));
        assert!(matches!(Nanos::parse_ms(""), Err(ParseMillisError::Syntax(_))));
    }

    #[test]
    fn float_literals_round_trip() {
        assert_eq!(Nanos::from_ms_f64(13.888889).unwrap(), Nanos(13_888_889));
        assert_eq!(Nanos::from_ms_f64(0.2).unwrap(), Nanos(200_000));
        assert_eq!(Nanos::from_ms_f64(-0.13).unwrap(), Nanos(-130_000));
    }

    #[test]
    fn display_is_exact() {
        assert_eq!(Nanos(13_888_889).to_string(), "13.888889");
        assert_eq!(Nanos(-400_000).to_string(), "-0.4");
        assert_eq!(Nanos(2_000_000).to_string(), "2");
    }

    #[test]
    fn half_floors() {
        assert_eq!(Nanos(1_000_001).half(), Nanos(500_000));
        assert_eq!(Nanos(-3).half(), Nanos(-2));
    }
}
