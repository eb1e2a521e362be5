//! Rational weights: parsing, serialization as `"p/q"`, and denominator
//! bookkeeping with an overflow-safe cap.

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

/// Default cap on common denominators (and hence on uniformized atom counts).
pub const DEFAULT_DENOMINATOR_CAP: u64 = 1_000_000;

/// Parses `"p/q"` or a bare integer `"p"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: i64 = num.parse().map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
    let den: i64 = den.parse().map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
    if den == 0 {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(Rational::new(num, den))
}

pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// `lcm(a, b)`, failing when the result exceeds `cap`.
pub fn lcm_capped(a: u64, b: u64, cap: u64) -> Result<u64> {
    let l = (a as u128).lcm(&(b as u128));
    if l > cap as u128 {
        Err(Error::DenominatorCap { denominator: l, cap })
    } else {
        Ok(l as u64)
    }
}

/// Least common denominator of a list of rationals.
pub fn common_denominator<'a>(
    weights: impl IntoIterator<Item = &'a Rational>,
    cap: u64,
) -> Result<u64> {
    weights.into_iter().try_fold(1u64, |acc, w| lcm_capped(acc, *w.denom() as u64, cap))
}

/// Simplest fraction with denominator at most `max_den` lying within `tol`
/// of `x`, found by walking the continued-fraction convergents.
pub fn snap_real(x: f64, max_den: u64, tol: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        if a.abs() > 1e15 {
            return None;
        }
        let ai = a as i128;
        let (h2, k2) = (ai * h1 + h0, ai * k1 + k0);
        if k2 > max_den as i128 {
            return None;
        }
        if ((h2 as f64) / (k2 as f64) - x).abs() <= tol {
            return Some(Rational::new(h2 as i64, k2 as i64));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = rest - a;
        if frac.is_zero() {
            return None;
        }
        rest = 1.0 / frac;
    }
    None
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
