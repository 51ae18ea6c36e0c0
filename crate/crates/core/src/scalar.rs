//! Numeric field abstraction so the exact engines run over `f64` or over
//! arbitrary-precision rationals with the same code.

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive, Zero};

pub trait Scalar: Clone + Debug + PartialEq + Num + Neg<Output = Self> + Send + Sync + 'static {
    /// Converts a letter probability. Rationals read the shortest decimal
    /// representation of `p`, so `0.7` becomes exactly `7/10`.
    fn from_prob(p: f64) -> Self;

    fn from_u128(n: u128) -> Self;

    fn to_f64(&self) -> f64;

    /// Sum of a sequence. The `f64` implementation is compensated.
    fn sum_iter<I: IntoIterator<Item = Self>>(iter: I) -> Self {
        iter.into_iter().fold(Self::zero(), |acc, x| acc + x)
    }

    fn powi(&self, exp: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }
}

impl Scalar for f64 {
    fn from_prob(p: f64) -> Self {
        p
    }

    fn from_u128(n: u128) -> Self {
        n as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn sum_iter<I: IntoIterator<Item = Self>>(iter: I) -> Self {
        neumaier_sum(iter)
    }

    fn powi(&self, exp: u32) -> Self {
        f64::powi(*self, exp as i32)
    }
}

impl Scalar for BigRational {
    fn from_prob(p: f64) -> Self {
        parse_decimal(&format!("{p}")).unwrap_or_else(|| {
            BigRational::from_float(p).expect("finite probability")
        })
    }

    fn from_u128(n: u128) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in iter {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Parses a plain decimal literal such as `0.7` or `12.25` into a rational.
pub fn parse_decimal(text: &str) -> Option<BigRational> {
    let text = text.trim();
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer = BigInt::parse_bytes(if digits.is_empty() { b"0" } else { digits.as_bytes() }, 10)?;
    let denom = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let r = BigRational::new(numer, denom);
    Some(if neg { -r } else { r })
}

/// Correctly scaled conversion that survives numerators and denominators
/// far beyond the `f64` range.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let nbits = r.numer().bits() as i64;
    let dbits = r.denom().bits() as i64;
    let shift = nbits - dbits - 60;
    let scaled = if shift > 0 {
        BigRational::new(r.numer().clone(), r.denom().clone() << (shift as usize))
    } else {
        BigRational::new(r.numer().clone() << ((-shift) as usize), r.denom().clone())
    };
    let approx = scaled.to_integer().to_f64().unwrap_or(f64::NAN);
    approx * 2f64.powi(shift as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parsing_is_exact() {
        let r = BigRational::from_prob(0.7);
        assert_eq!(r, BigRational::new(BigInt::from(7), BigInt::from(10)));
        assert_eq!(parse_decimal("12.25").unwrap(), BigRational::new(49.into(), 4.into()));
        assert!(parse_decimal("1e-3").is_none());
    }

    #[test]
    fn huge_rationals_convert() {
        let big = BigRational::new(BigInt::from(3) << 2000usize, BigInt::from(1) << 2001usize);
        assert!((rational_to_f64(&big) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(neumaier_sum(xs), 2.0);
    }
}
