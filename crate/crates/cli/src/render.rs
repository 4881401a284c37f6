//! Text forms of rationals for reports and CSV cells.

use cachecoder::analysis::formulas::{to_f64, Q};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::str::FromStr;

/// Exact decimal when the denominator divides a power of ten, `a/b` otherwise.
pub fn exact(x: &Q) -> String {
    let mut den = x.denom().clone();
    let (two, five) = (BigInt::from(2), BigInt::from(5));
    let (mut twos, mut fives) = (0usize, 0usize);
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return format!("{}/{}", x.numer(), x.denom());
    }
    let digits = twos.max(fives);
    let scaled = (x * Q::from_integer(BigInt::from(10).pow(digits as u32))).to_integer();
    if digits == 0 {
        return scaled.to_string();
    }
    let sign = if scaled.is_negative() { "-" } else { "" };
    let s = format!("{:0>width$}", scaled.abs().to_string(), width = digits + 1);
    let (int, frac) = s.split_at(s.len() - digits);
    format!("{sign}{int}.{frac}")
}

/// Fifteen significant digits, for values that came from a numerical root.
pub fn approx(x: &Q) -> String {
    let v = to_f64(x);
    let rounded: f64 = format!("{v:.14e}").parse().unwrap_or(v);
    format!("{rounded}")
}

pub fn value(x: &Q, numeric: bool) -> String {
    if numeric {
        approx(x)
    } else {
        exact(x)
    }
}

/// Parses `3`, `5/2` or `0.125` into an exact rational.
pub fn parse_rational(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let (n, d) = (
            BigInt::from_str(n.trim()).ok()?,
            BigInt::from_str(d.trim()).ok()?,
        );
        return (!d.is_zero()).then(|| Q::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = int.starts_with('-');
        let whole = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            BigInt::from_str(int).ok()?
        };
        let part = Q::new(
            BigInt::from_str(frac).ok()?,
            BigInt::from(10).pow(frac.len() as u32),
        );
        let whole = Q::from_integer(whole);
        return Some(if negative { whole - part } else { whole + part });
    }
    BigInt::from_str(s).ok().map(Q::from_integer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cachecoder::analysis::formulas::{q, qi};

    #[test]
    fn renders_terminating_fractions_as_decimals() {
        assert_eq!(exact(&q(9, 16)), "0.5625");
        assert_eq!(exact(&q(29, 4)), "7.25");
        assert_eq!(exact(&qi(3)), "3");
        assert_eq!(exact(&q(-1, 20)), "-0.05");
        assert_eq!(exact(&q(2, 3)), "2/3");
    }

    #[test]
    fn parses_back() {
        for s in ["0.5625", "7.25", "3", "2/3", "-0.05", ".5"] {
            let x = parse_rational(s).unwrap();
            assert_eq!(parse_rational(&exact(&x)), Some(x));
        }
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
    }

    #[test]
    fn approximations_keep_fifteen_digits() {
        assert_eq!(approx(&q(1, 3)), "0.333333333333333");
    }
}
