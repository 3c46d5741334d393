//! Exact rational scalars used throughout the pipeline.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Safe division: zero denominator yields zero.
pub fn safe_div(a: &Rat, b: &Rat) -> Rat {
    if b.is_zero() {
        Rat::zero()
    } else {
        a / b
    }
}

/// Renders a rational as `n` or `n/d`, matching the surface syntax.
pub fn render(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses the surface form `[-]int[/posint]`. Returns None on malformed input.
pub fn parse(text: &str) -> Option<Rat> {
    let (num_str, den_str) = match text.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (text, None),
    };
    let num: BigInt = num_str.parse().ok()?;
    // Reject forms like "1/ 2" or exponents; only digits allowed in the denominator.
    let den: BigInt = match den_str {
        Some(d) if !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()) => d.parse().ok()?,
        Some(_) => return None,
        None => BigInt::one(),
    };
    if den.is_zero() {
        return None;
    }
    Some(Rat::new(num, den))
}

/// The sampled value grid: integers -5..=5 and all halves in between.
pub fn value_grid() -> Vec<Rat> {
    (-10..=10).map(|i| rat(i, 2)).collect()
}

pub fn is_nonneg_integer(r: &Rat) -> bool {
    r.denom().is_one() && !r.numer().is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render_round_trip() {
        for s in ["0", "7", "-3", "3/2", "-9/4", "120/7"] {
            let r = parse(s).unwrap();
            assert_eq!(render(&r), s);
        }
    }

    #[test]
    fn parse_rejects_malformed() {
        for s in ["", "1.5", "1/0", "1/-2", "a", "1/", "/2", "1 / 2"] {
            assert!(parse(s).is_none(), "should reject {s:?}");
        }
    }

    #[test]
    fn safe_div_zero_denominator() {
        assert_eq!(safe_div(&rat_int(5), &Rat::zero()), Rat::zero());
        assert_eq!(safe_div(&rat_int(6), &rat_int(4)), rat(3, 2));
    }

    #[test]
    fn grid_has_21_values() {
        let g = value_grid();
        assert_eq!(g.len(), 21);
        assert!(g.contains(&rat(-9, 2)));
        assert!(g.contains(&rat_int(5)));
    }
}
