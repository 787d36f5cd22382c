//! Exact rational helpers: literal parsing, snapping floats to small
//! denominators, and display.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Largest denominator tried when snapping a float to a rational.
pub const SNAP_MAX_DENOMINATOR: i64 = 10_000;
/// A float snaps to `p/q` only when it is this close.
pub const SNAP_TOLERANCE: f64 = 1e-12;

/// Parses `p/q`, an integer, or a plain decimal such as `-0.125` exactly.
pub fn parse_exact(text: &str) -> Option<BigRational> {
    if let Some((p, q)) = text.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    if body.is_empty() || body.contains(['e', 'E']) {
        return None;
    }
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || (int.is_empty() && frac.is_empty()) {
        return None;
    }
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    let scale = BigInt::from(10).pow(frac.len() as u32);
    let r = BigRational::new(digits, scale);
    Some(if neg { -r } else { r })
}

/// Closest rational with denominator at most [`SNAP_MAX_DENOMINATOR`], if it
/// is within [`SNAP_TOLERANCE`] of `x`.
pub fn snap(x: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    // continued-fraction convergents
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > SNAP_MAX_DENOMINATOR {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h1 as f64 / k1 as f64).abs() <= SNAP_TOLERANCE {
            return Some(BigRational::new(h1.into(), k1.into()));
        }
        let frac = rest - a as f64;
        if frac.abs() < 1e-300 {
            break;
        }
        rest = 1.0 / frac;
    }
    None
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `p/q`, or `p` for integers.
pub fn display(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn is_nonnegative(r: &BigRational) -> bool {
    !r.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    #[test]
    fn parses_literals() {
        assert_eq!(parse_exact("1/3"), Some(q(1, 3)));
        assert_eq!(parse_exact("2/6"), Some(q(1, 3)));
        assert_eq!(parse_exact("0"), Some(q(0, 1)));
        assert_eq!(parse_exact("0.125"), Some(q(1, 8)));
        assert_eq!(parse_exact("-.5"), Some(q(-1, 2)));
        assert_eq!(parse_exact("1/0"), None);
        assert_eq!(parse_exact("1e-3"), None);
        assert_eq!(parse_exact("abc"), None);
        assert_eq!(parse_exact("."), None);
    }

    #[test]
    fn snaps_common_fractions() {
        assert_eq!(snap(1.0 / 12.0), Some(q(1, 12)));
        assert_eq!(snap(2.0 / 3.0), Some(q(2, 3)));
        assert_eq!(snap((1.0f64 / 3f64.sqrt()).powi(2)), Some(q(1, 3)));
        assert_eq!(snap(0.0), Some(q(0, 1)));
        assert_eq!(snap(1.0), Some(q(1, 1)));
        assert_eq!(snap(std::f64::consts::PI), None);
    }

    #[test]
    fn displays() {
        assert_eq!(display(&q(9, 12)), "3/4");
        assert_eq!(display(&q(4, 2)), "2");
    }
}
