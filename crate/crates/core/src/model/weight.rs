use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeightParseError {
    #[error("empty weight")]
    Empty,
    #[error("malformed weight `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Parses `"p/q"`, an integer, or a decimal (optionally with exponent) into an
/// exact rational. `"0.3"` becomes `3/10`, not the nearest binary float.
pub fn parse_weight(text: &str) -> Result<BigRational, WeightParseError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(WeightParseError::Empty);
    }
    if let Some((p, q)) = s.split_once('/') {
        let num = parse_integer(p.trim()).ok_or_else(|| WeightParseError::Malformed(s.into()))?;
        let den = parse_integer(q.trim()).ok_or_else(|| WeightParseError::Malformed(s.into()))?;
        if den.is_zero() {
            return Err(WeightParseError::ZeroDenominator(s.into()));
        }
        return Ok(BigRational::new(num, den));
    }
    parse_decimal(s).ok_or_else(|| WeightParseError::Malformed(s.into()))
}

fn parse_integer(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.strip_prefix('+').unwrap_or(s).parse().ok()
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, body) = match mantissa.as_bytes().first()? {
        b'-' => (true, &mantissa[1..]),
        b'+' => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let all_digits = int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit());
    if !all_digits {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num: BigInt = digits.parse().ok()?;
    if negative {
        num = -num;
    }
    let scale = exponent - i32::try_from(frac_part.len()).ok()?;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        BigRational::from_integer(num * Pow::pow(&ten, scale.unsigned_abs()))
    } else {
        BigRational::new(num, Pow::pow(&ten, scale.unsigned_abs()))
    };
    Some(value)
}

/// Exact conversion of a finite float (as it appears in JSON) into a rational
/// via its shortest decimal representation.
pub fn weight_from_f64(value: f64) -> Result<BigRational, WeightParseError> {
    if !value.is_finite() {
        return Err(WeightParseError::Malformed(value.to_string()));
    }
    parse_decimal(&format!("{value:e}")).ok_or_else(|| WeightParseError::Malformed(value.to_string()))
}

/// Formats as `"p"` or `"p/q"`; the inverse of [`parse_weight`].
pub fn format_weight(value: &BigRational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn weight_to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or_else(|| if value.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}
