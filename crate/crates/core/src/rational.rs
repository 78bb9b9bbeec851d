//! Exact rational helpers shared by every module.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number used throughout the crate.
pub type Q = BigRational;

pub fn int(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

pub fn frac(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `7`, `-3/2`, `0.30435` or `-1.5e-3` into an exact rational.
pub fn parse_rational(text: &str) -> Option<Q> {
    let s = text.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Q::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, fraction) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && fraction.is_empty() {
        return None;
    }
    if !whole.chars().chain(fraction.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: String = format!("{whole}{fraction}");
    let mut num: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().ok()? };
    if neg {
        num = -num;
    }
    let scale = exp - fraction.len() as i32;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        Q::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Q::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}

pub fn to_f64(q: &Q) -> f64 {
    if let Some(v) = q.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // Very large numerators/denominators: go through logarithms.
    let sign = if q.is_negative() { -1.0 } else { 1.0 };
    if q.is_zero() {
        return 0.0;
    }
    sign * ln_abs(q).exp()
}

fn ln_biguint(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().unwrap_or(1.0);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural logarithm of |q|; `-inf` for zero. Safe for values far outside
/// the f64 range.
pub fn ln_abs(q: &Q) -> f64 {
    if q.is_zero() {
        return f64::NEG_INFINITY;
    }
    let n = q.numer().magnitude();
    let d = q.denom().magnitude();
    ln_biguint(n) - ln_biguint(d)
}

/// Fixed-point decimal rendering with round-half-away-from-zero.
pub fn fmt_fixed(q: &Q, digits: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10u32), digits);
    let scaled = q * Q::from_integer(scale.clone());
    let half = frac(1, 2);
    let rounded = if scaled.is_negative() {
        -((-scaled) + half).floor()
    } else {
        (scaled + half).floor()
    };
    let mut n = rounded.to_integer();
    let neg = n.sign() == Sign::Minus;
    if neg {
        n = -n;
    }
    let (whole, rest) = n.div_rem(&scale);
    let sign = if neg && !(whole.is_zero() && rest.is_zero()) { "-" } else { "" };
    if digits == 0 {
        return format!("{sign}{whole}");
    }
    format!("{sign}{whole}.{:0>width$}", rest.to_string(), width = digits)
}

pub fn max_q<'a, I: IntoIterator<Item = &'a Q>>(items: I) -> Option<Q> {
    items.into_iter().max().cloned()
}

pub fn pow_q(base: &Q, exp: u32) -> Q {
    let mut acc = Q::one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Falling factorial n (n-1) ... (n-k+1), the number of ordered k-tuples of
/// distinct elements from an n-set.
pub fn falling(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    (0..k).fold(BigUint::one(), |acc, i| acc * BigUint::from(n - i))
}

pub fn q_from_biguint(v: BigUint) -> Q {
    Q::from_integer(BigInt::from_biguint(Sign::Plus, v))
}
