//! Exact arbitrary-precision arithmetic and the integer-only bounding
//! functions the samplers are built on.
//!
//! Everything here is a pure function over [`BigInt`] / [`Rational`]. No
//! floating point: magnitude bounds are expressed as powers of two and
//! obtained by exact comparison.

use num_bigint::Sign;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub use num_bigint::BigInt;

/// Exact ratio of two big integers, always in reduced form with a positive
/// denominator.
pub type Rational = num_rational::BigRational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ArithError {
    #[error("argument must be positive")]
    NonPositive,
    #[error("argument must be greater than one")]
    NotAboveOne,
    #[error("square root of a negative integer")]
    NegativeSqrt,
    #[error("binomial coefficient requires 0 <= k <= n")]
    BinomialOutOfRange,
    #[error("multinomial parts must be nonnegative and sum to k")]
    MultinomialMismatch,
    #[error("cannot parse rational from {0:?}")]
    ParseRational(String),
}

/// Smallest integer `e` with `2^e >= x`, for `x > 0`.
///
/// This is `ceil(log2 x)`, computed by exact comparison against powers of
/// two; `e` may be negative.
pub fn pow2_ceil_exp(x: &Rational) -> Result<i64, ArithError> {
    if !x.is_positive() {
        return Err(ArithError::NonPositive);
    }
    let num = x.numer().magnitude();
    let den = x.denom().magnitude();
    // num.bits() - den.bits() is within 1 of log2(x); correct by comparison.
    let mut e = num.bits() as i64 - den.bits() as i64;
    while !pow2_at_least(e, x) {
        e += 1;
    }
    while pow2_at_least(e - 1, x) {
        e -= 1;
    }
    Ok(e)
}

/// `2^e >= x`, exactly. `x` must be positive.
fn pow2_at_least(e: i64, x: &Rational) -> bool {
    let num = x.numer();
    let den = x.denom();
    if e >= 0 {
        (den << (e as u64)) >= *num
    } else {
        *den >= (num << ((-e) as u64))
    }
}

/// Exact power of two as a rational; `e` may be negative.
pub fn pow2(e: i64) -> Rational {
    if e >= 0 {
        Rational::from_integer(BigInt::one() << (e as u64))
    } else {
        Rational::new(BigInt::one(), BigInt::one() << ((-e) as u64))
    }
}

/// Smallest `s >= 0` with `s*s >= n`, for `n >= 0`.
pub fn isqrt_ceil(n: &BigInt) -> Result<BigInt, ArithError> {
    if n.is_negative() {
        return Err(ArithError::NegativeSqrt);
    }
    let floor = n.sqrt();
    if &floor * &floor >= *n {
        Ok(floor)
    } else {
        Ok(floor + 1)
    }
}

/// Integer upper bound on `ln x` for `x > 1`, namely `ceil(log2 x)`.
///
/// Valid because `ln x <= log2 x` for `x >= 1`; keeping the bound a plain
/// integer keeps every downstream expression exactly representable.
pub fn ln_upper_bound(x: &Rational) -> Result<u64, ArithError> {
    if *x <= Rational::one() {
        return Err(ArithError::NotAboveOne);
    }
    let e = pow2_ceil_exp(x)?;
    debug_assert!(e >= 1);
    Ok(e as u64)
}

/// Exact binomial coefficient `C(n, k)`.
pub fn binomial_coeff(n: &BigInt, k: &BigInt) -> Result<BigInt, ArithError> {
    if k.is_negative() || k > n {
        return Err(ArithError::BinomialOutOfRange);
    }
    // Symmetry keeps the multiply/divide loop at min(k, n-k) steps.
    let k = std::cmp::min(k.clone(), n - k);
    let mut result = BigInt::one();
    let mut i = BigInt::one();
    while i <= k {
        result = result * (n - &k + &i) / &i;
        i += 1;
    }
    Ok(result)
}

/// Exact multinomial coefficient `k! / (parts[0]! * parts[1]! * ...)`.
///
/// The parts must be nonnegative and sum to `k`. Computed as a product of
/// binomial coefficients over partial sums, never via full factorials.
pub fn multinomial(k: &BigInt, parts: &[BigInt]) -> Result<BigInt, ArithError> {
    let mut total = BigInt::zero();
    let mut result = BigInt::one();
    for part in parts {
        if part.is_negative() {
            return Err(ArithError::MultinomialMismatch);
        }
        total += part;
        result *= binomial_coeff(&total, part).map_err(|_| ArithError::MultinomialMismatch)?;
    }
    if total != *k {
        return Err(ArithError::MultinomialMismatch);
    }
    Ok(result)
}

/// Parses a rational from `"a/b"`, a decimal string like `"0.25"`, a plain
/// integer, or scientific notation like `"1e-2"` / `"2.5e3"`. All forms
/// convert exactly.
pub fn parse_rational(s: &str) -> Result<Rational, ArithError> {
    let s = s.trim();
    let err = || ArithError::ParseRational(s.to_string());
    if s.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| err())?;
        let den: BigInt = den.trim().parse().map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(num, den));
    }
    // Split off a scientific exponent, then a decimal point.
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i64>().map_err(|_| err())?),
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if frac_part.contains(['+', '-']) {
        return Err(err());
    }
    let digits = format!("{int_part}{frac_part}");
    if digits.is_empty() || digits == "+" || digits == "-" {
        return Err(err());
    }
    let unscaled: BigInt = digits.parse().map_err(|_| err())?;
    let scale = exp - frac_part.len() as i64;
    let ten = BigInt::from(10u32);
    Ok(if scale >= 0 {
        Rational::from_integer(unscaled * ten.pow(scale as u32))
    } else {
        Rational::new(unscaled, ten.pow((-scale) as u32))
    })
}

/// Formats a rational as `"a/b"`, or just `"a"` when the denominator is one.
/// Round-trips exactly through [`parse_rational`].
pub fn format_rational(x: &Rational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Decimal rendering of a rational, truncated toward zero at `digits`
/// fractional digits. Used only for reporting.
pub fn decimal_string(x: &Rational, digits: usize) -> String {
    let sign = if x.is_negative() { "-" } else { "" };
    let abs = x.abs();
    let scaled = abs.numer() * BigInt::from(10u32).pow(digits as u32) / abs.denom();
    let s = scaled.to_string();
    if digits == 0 {
        return format!("{sign}{s}");
    }
    let (int_part, frac_part) = if s.len() > digits {
        let split = s.len() - digits;
        (s[..split].to_string(), s[split..].to_string())
    } else {
        ("0".to_string(), format!("{s:0>digits$}"))
    };
    format!("{sign}{int_part}.{frac_part}")
}

/// Lossy conversion for reporting; never used in a sampling path.
pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // Out-of-range ratios still have a meaningful sign.
        match x.numer().sign() {
            Sign::Minus => f64::NEG_INFINITY,
            _ => f64::INFINITY,
        }
    })
}

/// Convenience constructor for small rationals.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(n: i64) -> BigInt {
        BigInt::from(n)
    }

    #[test]
    fn pow2_ceil_exp_examples() {
        assert_eq!(pow2_ceil_exp(&ratio(1, 1)).unwrap(), 0);
        assert_eq!(pow2_ceil_exp(&ratio(1, 3)).unwrap(), -1);
        assert_eq!(pow2_ceil_exp(&ratio(32, 15)).unwrap(), 2);
        assert_eq!(pow2_ceil_exp(&ratio(8, 1)).unwrap(), 3);
        assert_eq!(pow2_ceil_exp(&ratio(1, 4)).unwrap(), -2);
        assert_eq!(pow2_ceil_exp(&ratio(0, 1)), Err(ArithError::NonPositive));
        assert_eq!(pow2_ceil_exp(&ratio(-3, 2)), Err(ArithError::NonPositive));
    }

    #[test]
    fn isqrt_ceil_examples() {
        assert_eq!(isqrt_ceil(&big(0)).unwrap(), big(0));
        assert_eq!(isqrt_ceil(&big(2048)).unwrap(), big(46));
        assert_eq!(isqrt_ceil(&big(1024)).unwrap(), big(32));
        assert_eq!(isqrt_ceil(&big(-1)), Err(ArithError::NegativeSqrt));
    }

    #[test]
    fn ln_upper_bound_examples() {
        assert_eq!(ln_upper_bound(&ratio(2, 1)).unwrap(), 1);
        assert_eq!(ln_upper_bound(&ratio(200, 1)).unwrap(), 8);
        // 2 / (1/100) = 200
        let x = ratio(2, 1) / ratio(1, 100);
        assert_eq!(ln_upper_bound(&x).unwrap(), 8);
        // The bound must dominate ln x: ln 200 = 5.298...
        assert!(8.0 >= 200.0f64.ln());
        assert_eq!(ln_upper_bound(&ratio(1, 1)), Err(ArithError::NotAboveOne));
        assert_eq!(ln_upper_bound(&ratio(1, 2)), Err(ArithError::NotAboveOne));
    }

    #[test]
    fn binomial_coeff_examples() {
        assert_eq!(binomial_coeff(&big(15), &big(5)).unwrap(), big(3003));
        assert_eq!(binomial_coeff(&big(7), &big(0)).unwrap(), big(1));
        assert_eq!(binomial_coeff(&big(6), &big(3)).unwrap(), big(20));
        assert!(binomial_coeff(&big(3), &big(4)).is_err());
        assert!(binomial_coeff(&big(3), &big(-1)).is_err());
    }

    #[test]
    fn binomial_coeff_matches_pascal_recurrence() {
        // Independent oracle: Pascal's triangle, addition only.
        let mut row = vec![BigInt::one()];
        for n in 1..=20i64 {
            let mut next = vec![BigInt::one()];
            for k in 1..n as usize {
                next.push(&row[k - 1] + &row[k]);
            }
            next.push(BigInt::one());
            row = next;
            for (k, expect) in row.iter().enumerate() {
                assert_eq!(&binomial_coeff(&big(n), &big(k as i64)).unwrap(), expect);
            }
        }
    }

    /// Counts distinct orderings of the multiset by explicit enumeration.
    fn count_multiset_orderings(counts: &mut Vec<u64>, remaining: u64) -> u64 {
        if remaining == 0 {
            return 1;
        }
        let mut total = 0;
        for i in 0..counts.len() {
            if counts[i] > 0 {
                counts[i] -= 1;
                total += count_multiset_orderings(counts, remaining - 1);
                counts[i] += 1;
            }
        }
        total
    }

    #[test]
    fn multinomial_examples() {
        let parts = |v: &[i64]| v.iter().map(|&x| big(x)).collect::<Vec<_>>();
        assert_eq!(multinomial(&big(2), &parts(&[1, 1, 0, 0])).unwrap(), big(2));
        assert_eq!(multinomial(&big(3), &parts(&[3, 0, 0, 0])).unwrap(), big(1));
        assert_eq!(multinomial(&big(4), &parts(&[2, 1, 1, 0])).unwrap(), big(12));
        assert!(multinomial(&big(4), &parts(&[2, 1])).is_err());
        assert!(multinomial(&big(1), &parts(&[2, -1])).is_err());
    }

    #[test]
    fn multinomial_matches_enumeration() {
        // Brute-force oracle over all small part vectors with k <= 8.
        let cases: &[&[u64]] = &[
            &[2, 1, 1, 0],
            &[3, 3],
            &[1, 1, 1, 1],
            &[4, 2, 2],
            &[5, 0, 3],
            &[2, 2, 2, 2],
        ];
        for &case in cases {
            let k: u64 = case.iter().sum();
            let mut counts = case.to_vec();
            let expect = count_multiset_orderings(&mut counts, k);
            let parts: Vec<BigInt> = case.iter().map(|&x| BigInt::from(x)).collect();
            assert_eq!(
                multinomial(&BigInt::from(k), &parts).unwrap(),
                BigInt::from(expect)
            );
        }
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("1/3").unwrap(), ratio(1, 3));
        assert_eq!(parse_rational("0.25").unwrap(), ratio(1, 4));
        assert_eq!(parse_rational("0.333").unwrap(), ratio(333, 1000));
        assert_eq!(parse_rational("1e-2").unwrap(), ratio(1, 100));
        assert_eq!(parse_rational("2.5e3").unwrap(), ratio(2500, 1));
        assert_eq!(parse_rational("-7/2").unwrap(), ratio(-7, 2));
        assert_eq!(parse_rational("42").unwrap(), ratio(42, 1));
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.2.3").is_err());
    }

    #[test]
    fn decimal_string_reporting() {
        assert_eq!(decimal_string(&ratio(1, 4), 6), "0.250000");
        assert_eq!(decimal_string(&ratio(1, 3), 4), "0.3333");
        assert_eq!(decimal_string(&ratio(-5, 2), 2), "-2.50");
        assert_eq!(decimal_string(&ratio(7, 1), 0), "7");
    }

    proptest! {
        #[test]
        fn pow2_ceil_exp_brackets(num in 1i64..100_000, den in 1i64..100_000) {
            let x = ratio(num, den);
            let e = pow2_ceil_exp(&x).unwrap();
            prop_assert!(pow2(e) >= x);
            prop_assert!(pow2(e - 1) < x);
        }

        #[test]
        fn isqrt_ceil_brackets(n in 1u64..u64::MAX) {
            let n = BigInt::from(n);
            let s = isqrt_ceil(&n).unwrap();
            prop_assert!(&s * &s >= n);
            let below = &s - 1;
            prop_assert!(&below * &below < n);
        }

        #[test]
        fn rational_normalization(a in -1000i64..1000, b in 1i64..1000) {
            prop_assume!(a != 0);
            let x = ratio(a, b);
            let g = num_integer::gcd(a.unsigned_abs(), b as u64);
            prop_assert_eq!(x.numer(), &big(a / g as i64));
            prop_assert_eq!(x.denom(), &big(b / g as i64));
            let inv = ratio(b, a);
            prop_assert!((x * inv).is_one());
        }

        #[test]
        fn rational_string_round_trip(a in -10_000i64..10_000, b in 1i64..10_000) {
            let x = ratio(a, b);
            prop_assert_eq!(parse_rational(&format_rational(&x)).unwrap(), x);
        }
    }
}
