//! Exponents of `n` as exact linear forms over named parameters.
//!
//! A big-O term `n^e` is represented by its exponent `e`. Products of terms
//! become sums of exponents, sums of terms become maxima, and square roots
//! halve the exponent. Polylogarithmic and constant factors are dropped.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::{parse_rational, Q};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("unbound parameter(s): {}", .0.join(", "))]
    Unbound(Vec<String>),
    #[error("max of an empty list of exponents")]
    EmptyMax,
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

/// Values for named parameters.
pub type Assignment = BTreeMap<String, Q>;

/// `constant + Σ coefficient · parameter`, kept in canonical form (no zero
/// coefficients stored).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LinearExponent {
    constant: Q,
    coefficients: BTreeMap<String, Q>,
}

impl LinearExponent {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(value: Q) -> Self {
        Self { constant: value, coefficients: BTreeMap::new() }
    }

    pub fn var(name: &str) -> Self {
        Self::term(Q::one(), name)
    }

    pub fn term(coefficient: Q, name: &str) -> Self {
        let mut coefficients = BTreeMap::new();
        if !coefficient.is_zero() {
            coefficients.insert(name.to_string(), coefficient);
        }
        Self { constant: Q::zero(), coefficients }
    }

    pub fn constant_term(&self) -> &Q {
        &self.constant
    }

    pub fn coefficient(&self, name: &str) -> Q {
        self.coefficients.get(name).cloned().unwrap_or_else(Q::zero)
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&str, &Q)> {
        self.coefficients.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.coefficients.keys().map(String::as_str)
    }

    pub fn is_constant(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn scale(&self, factor: &Q) -> Self {
        if factor.is_zero() {
            return Self::zero();
        }
        Self {
            constant: &self.constant * factor,
            coefficients: self
                .coefficients
                .iter()
                .map(|(k, v)| (k.clone(), v * factor))
                .collect(),
        }
    }

    /// Exponent of `sqrt(n^e)`.
    pub fn sqrt(&self) -> Self {
        self.scale(&Q::new(1.into(), 2.into()))
    }

    fn add_term(&mut self, name: &str, coefficient: &Q) {
        if coefficient.is_zero() {
            return;
        }
        let entry = self.coefficients.entry(name.to_string()).or_insert_with(Q::zero);
        *entry += coefficient;
        if entry.is_zero() {
            self.coefficients.remove(name);
        }
    }

    pub fn evaluate(&self, assignment: &Assignment) -> Result<Q, ExprError> {
        let missing: Vec<String> = self
            .coefficients
            .keys()
            .filter(|k| !assignment.contains_key(*k))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(ExprError::Unbound(missing));
        }
        Ok(self
            .coefficients
            .iter()
            .fold(self.constant.clone(), |acc, (k, c)| acc + c * &assignment[k]))
    }

    /// Substitutes some parameters by other linear forms.
    pub fn substitute(&self, bindings: &BTreeMap<String, LinearExponent>) -> Self {
        let mut out = Self::constant(self.constant.clone());
        for (name, c) in &self.coefficients {
            match bindings.get(name) {
                Some(expr) => out += expr.scale(c),
                None => out.add_term(name, c),
            }
        }
        out
    }
}

/// Exponent of a product of big-O terms.
pub fn combine<'a, I: IntoIterator<Item = &'a LinearExponent>>(terms: I) -> LinearExponent {
    terms.into_iter().fold(LinearExponent::zero(), |acc, t| acc + t)
}

/// Exponent of a sum of big-O terms.
pub fn max_of<I: IntoIterator<Item = LinearExponent>>(terms: I) -> Result<MaxExpr, ExprError> {
    MaxExpr::new(terms)
}

impl AddAssign<LinearExponent> for LinearExponent {
    fn add_assign(&mut self, rhs: LinearExponent) {
        self.constant += rhs.constant;
        for (k, v) in rhs.coefficients {
            self.add_term(&k, &v);
        }
    }
}

impl<'a> AddAssign<&'a LinearExponent> for LinearExponent {
    fn add_assign(&mut self, rhs: &'a LinearExponent) {
        self.constant += &rhs.constant;
        for (k, v) in &rhs.coefficients {
            self.add_term(k, v);
        }
    }
}

impl Add for LinearExponent {
    type Output = LinearExponent;
    fn add(mut self, rhs: LinearExponent) -> LinearExponent {
        self += rhs;
        self
    }
}

impl<'a> Add<&'a LinearExponent> for LinearExponent {
    type Output = LinearExponent;
    fn add(mut self, rhs: &'a LinearExponent) -> LinearExponent {
        self += rhs;
        self
    }
}

impl Neg for LinearExponent {
    type Output = LinearExponent;
    fn neg(self) -> LinearExponent {
        self.scale(&-Q::one())
    }
}

impl Sub for LinearExponent {
    type Output = LinearExponent;
    fn sub(self, rhs: LinearExponent) -> LinearExponent {
        self + (-rhs)
    }
}

impl<'a> Sub<&'a LinearExponent> for LinearExponent {
    type Output = LinearExponent;
    fn sub(self, rhs: &'a LinearExponent) -> LinearExponent {
        self + (-rhs.clone())
    }
}

impl Add<Q> for LinearExponent {
    type Output = LinearExponent;
    fn add(mut self, rhs: Q) -> LinearExponent {
        self.constant += rhs;
        self
    }
}

impl Mul<&Q> for &LinearExponent {
    type Output = LinearExponent;
    fn mul(self, rhs: &Q) -> LinearExponent {
        self.scale(rhs)
    }
}

fn write_coefficient(f: &mut fmt::Formatter<'_>, c: &Q, first: bool) -> fmt::Result {
    let mag = c.abs();
    if c.is_negative() {
        f.write_str(if first { "-" } else { " - " })?;
    } else if !first {
        f.write_str(" + ")?;
    }
    if !mag.is_one() {
        write!(f, "{mag}*")?;
    }
    Ok(())
}

impl fmt::Display for LinearExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, c) in &self.coefficients {
            write_coefficient(f, c, first)?;
            f.write_str(name)?;
            first = false;
        }
        if first {
            return write!(f, "{}", self.constant);
        }
        if !self.constant.is_zero() {
            let mag = self.constant.abs();
            let op = if self.constant.is_negative() { " - " } else { " + " };
            write!(f, "{op}{mag}")?;
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> ExprError {
        ExprError::Parse { pos: self.pos, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(|c: char| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn number(&mut self) -> Result<Q, ExprError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || c == '.' || c == '/' {
                self.pos += 1;
            } else {
                break;
            }
        }
        parse_rational(&self.src[start..self.pos]).ok_or_else(|| {
            ExprError::Parse { pos: start, msg: format!("bad number {:?}", &self.src[start..self.pos]) }
        })
    }

    fn ident(&mut self) -> Result<String, ExprError> {
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => self.pos += 1,
            _ => return Err(self.err("expected parameter name or number")),
        }
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok(self.src[start..self.pos].to_string())
    }

    fn term(&mut self) -> Result<LinearExponent, ExprError> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let coefficient = self.number()?;
                self.skip_ws();
                if self.peek() == Some('*') {
                    self.pos += 1;
                    self.skip_ws();
                    let name = self.ident()?;
                    Ok(LinearExponent::term(coefficient, &name))
                } else {
                    Ok(LinearExponent::constant(coefficient))
                }
            }
            _ => {
                let name = self.ident()?;
                Ok(LinearExponent::var(&name))
            }
        }
    }

    fn expr(&mut self) -> Result<LinearExponent, ExprError> {
        self.skip_ws();
        let mut negate = false;
        if let Some(c @ ('-' | '+')) = self.peek() {
            negate = c == '-';
            self.pos += 1;
        }
        let mut acc = self.term()?;
        if negate {
            acc = -acc;
        }
        loop {
            self.skip_ws();
            match self.peek() {
                None => return Ok(acc),
                Some('+') => {
                    self.pos += 1;
                    acc += self.term()?;
                }
                Some('-') => {
                    self.pos += 1;
                    acc += -self.term()?;
                }
                Some(c) => return Err(self.err(format!("unexpected character {c:?}"))),
            }
        }
    }
}

impl FromStr for LinearExponent {
    type Err = ExprError;

    /// Accepts the syntax `1/2*a_1 + b_12 - 3/2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Parser { src: s, pos: 0 }.expr()
    }
}

/// Maximum of a nonempty set of linear exponents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxExpr {
    terms: BTreeSet<LinearExponent>,
}

impl MaxExpr {
    pub fn new<I: IntoIterator<Item = LinearExponent>>(terms: I) -> Result<Self, ExprError> {
        let terms: BTreeSet<_> = terms.into_iter().collect();
        if terms.is_empty() {
            return Err(ExprError::EmptyMax);
        }
        Ok(Self { terms })
    }

    pub fn single(term: LinearExponent) -> Self {
        Self { terms: BTreeSet::from([term]) }
    }

    pub fn terms(&self) -> impl Iterator<Item = &LinearExponent> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn evaluate(&self, assignment: &Assignment) -> Result<Q, ExprError> {
        let mut best: Option<Q> = None;
        for t in &self.terms {
            let v = t.evaluate(assignment)?;
            if best.as_ref().is_none_or(|b| v > *b) {
                best = Some(v);
            }
        }
        Ok(best.expect("MaxExpr is nonempty"))
    }

    /// `max(self) + max(other)`: every pairwise sum.
    pub fn plus(&self, other: &MaxExpr) -> MaxExpr {
        let terms = self
            .terms
            .iter()
            .flat_map(|a| other.terms.iter().map(move |b| a.clone() + b))
            .collect();
        MaxExpr { terms }
    }

    pub fn shift(&self, by: &LinearExponent) -> MaxExpr {
        MaxExpr { terms: self.terms.iter().map(|t| t.clone() + by).collect() }
    }

    pub fn max(&self, other: &MaxExpr) -> MaxExpr {
        MaxExpr { terms: self.terms.union(&other.terms).cloned().collect() }
    }

    pub fn sqrt(&self) -> MaxExpr {
        MaxExpr { terms: self.terms.iter().map(LinearExponent::sqrt).collect() }
    }

    /// Drops constant terms that are dominated by another constant term.
    pub fn simplified(&self) -> MaxExpr {
        let best_const = self.terms.iter().filter(|t| t.is_constant()).max_by(|a, b| a.constant.cmp(&b.constant));
        let terms = self
            .terms
            .iter()
            .filter(|t| !t.is_constant() || Some(*t) == best_const)
            .cloned()
            .collect();
        MaxExpr { terms }
    }
}

impl fmt::Display for MaxExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.len() == 1 {
            return write!(f, "{}", self.terms.iter().next().unwrap());
        }
        f.write_str("max(")?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};
    use proptest::prelude::*;

    fn assign(pairs: &[(&str, Q)]) -> Assignment {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn product_and_sqrt_rules() {
        let half = LinearExponent::constant(frac(1, 2));
        let third = LinearExponent::constant(frac(1, 3));
        assert_eq!(combine([&half, &third]).constant_term(), &frac(5, 6));
        let a = LinearExponent::var("a");
        assert_eq!(a.sqrt(), LinearExponent::term(frac(1, 2), "a"));
        let m = max_of([LinearExponent::constant(int(2)), LinearExponent::constant(frac(3, 2))]).unwrap();
        assert_eq!(m.evaluate(&Assignment::new()).unwrap(), int(2));
    }

    #[test]
    fn zero_assignment_gives_constant() {
        let e: LinearExponent = "1/2*a_1 + b_12 - 3/2".parse().unwrap();
        let v = e.evaluate(&assign(&[("a_1", int(0)), ("b_12", int(0))])).unwrap();
        assert_eq!(v, frac(-3, 2));
    }

    #[test]
    fn unbound_names_are_listed() {
        let e: LinearExponent = "a + b - c".parse().unwrap();
        let err = e.evaluate(&assign(&[("b", int(1))])).unwrap_err();
        assert_eq!(err, ExprError::Unbound(vec!["a".into(), "c".into()]));
    }

    #[test]
    fn canonical_form_drops_cancelled_terms() {
        let e: LinearExponent = "a_1 + b_12 - a_1".parse().unwrap();
        assert_eq!(e, LinearExponent::var("b_12"));
        assert_eq!(e.names().count(), 1);
    }

    #[test]
    fn display_round_trips_through_parser() {
        let e: LinearExponent = "1/2*a_1 + b_12 - 3/2".parse().unwrap();
        assert_eq!(e.to_string(), "1/2*a_1 + b_12 - 3/2");
        let back: LinearExponent = e.to_string().parse().unwrap();
        assert_eq!(back, e);
        let neg: LinearExponent = "-a - 2*b".parse().unwrap();
        assert_eq!(neg.to_string(), "-a - 2*b");
        assert_eq!(LinearExponent::zero().to_string(), "0");
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = "a + * b".parse::<LinearExponent>().unwrap_err();
        assert!(matches!(err, ExprError::Parse { pos: 4, .. }));
        assert!("".parse::<LinearExponent>().is_err());
        assert!("a ^ 2".parse::<LinearExponent>().is_err());
    }

    #[test]
    fn empty_max_rejected() {
        assert_eq!(max_of(Vec::new()).unwrap_err(), ExprError::EmptyMax);
    }

    fn arb_form() -> impl Strategy<Value = LinearExponent> {
        let names = prop::sample::select(vec!["a_1", "a_2", "b_12", "c_123"]);
        (
            -20i64..20,
            prop::collection::vec((names, -12i64..12, 1i64..6), 0..4),
        )
            .prop_map(|(c, terms)| {
                let mut e = LinearExponent::constant(frac(c, 4));
                for (name, num, den) in terms {
                    e += LinearExponent::term(frac(num, den), name);
                }
                e
            })
    }

    fn arb_assignment() -> impl Strategy<Value = Assignment> {
        prop::collection::vec((-30i64..30, 1i64..7), 4).prop_map(|v| {
            ["a_1", "a_2", "b_12", "c_123"]
                .iter()
                .zip(v)
                .map(|(k, (n, d))| (k.to_string(), frac(n, d)))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn combine_is_associative_and_commutative(a in arb_form(), b in arb_form(), c in arb_form()) {
            prop_assert_eq!(combine([&a, &b]), combine([&b, &a]));
            let left = combine([&combine([&a, &b]), &c]);
            let right = combine([&a, &combine([&b, &c])]);
            prop_assert_eq!(left, right);
        }

        #[test]
        fn max_matches_termwise_max(forms in prop::collection::vec(arb_form(), 1..6), v in arb_assignment()) {
            let m = max_of(forms.clone()).unwrap();
            let direct = forms.iter().map(|f| f.evaluate(&v).unwrap()).max().unwrap();
            prop_assert_eq!(m.evaluate(&v).unwrap(), direct);
        }

        #[test]
        fn max_is_commutative_and_associative(a in arb_form(), b in arb_form(), c in arb_form(), v in arb_assignment()) {
            let ab = max_of([a.clone(), b.clone()]).unwrap();
            let ba = max_of([b.clone(), a.clone()]).unwrap();
            prop_assert_eq!(&ab, &ba);
            let left = ab.max(&MaxExpr::single(c.clone()));
            let right = MaxExpr::single(a).max(&max_of([b, c]).unwrap());
            prop_assert_eq!(left.evaluate(&v).unwrap(), right.evaluate(&v).unwrap());
        }

        #[test]
        fn printing_then_parsing_is_identity(a in arb_form()) {
            let back: LinearExponent = a.to_string().parse().unwrap();
            prop_assert_eq!(back, a);
        }
    }
}
