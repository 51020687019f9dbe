//! Arbitrary-precision rational scalars and their `"p/q"` text form.

use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// The scalar type of the whole crate. `BigRational` keeps values in
/// canonical form (reduced, positive denominator), so equality is exact.
pub type Q = BigRational;

pub fn qz() -> Q {
    Q::zero()
}

pub fn qone() -> Q {
    Q::one()
}

/// Rational from an integer pair. Panics on a zero denominator.
pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// Rational from an integer.
pub fn qi(num: i64) -> Q {
    Q::from_integer(BigInt::from(num))
}

/// Canonical `"p/q"` form, e.g. `"3/2"`, `"-1/2"`, `"0/1"`, `"5/1"`.
pub fn format_q(value: &Q) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Parses `"p/q"` or a bare integer `"p"`.
pub fn parse_q(text: &str) -> Result<Q> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational numerator in {text:?}")))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational denominator in {text:?}")))?;
    if den.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {text:?}")));
    }
    Ok(Q::new(num, den))
}

/// max(x, 0), the scalar ReLU.
pub fn relu(value: &Q) -> Q {
    if value.is_negative() {
        qz()
    } else {
        value.clone()
    }
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["3/2", "-1/2", "0/1", "7/1", "-10/4"] {
            let v = parse_q(s).unwrap();
            let t = parse_q(&format_q(&v)).unwrap();
            assert_eq!(v, t);
        }
        assert_eq!(parse_q("5").unwrap(), qi(5));
        assert_eq!(format_q(&q(-10, 4)), "-5/2");
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("a/b").is_err());
    }

    #[test]
    fn relu_clamps_negatives() {
        assert_eq!(relu(&q(-3, 2)), qz());
        assert_eq!(relu(&q(3, 2)), q(3, 2));
        assert_eq!(relu(&qz()), qz());
    }
}
