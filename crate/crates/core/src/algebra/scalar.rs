//! Exact arithmetic in the ordered field Q(√2).
//!
//! Rationals are kept as checked `i64` ratios and promoted to arbitrary
//! precision only when an operation would overflow, so the common case of
//! small denominators never touches the heap.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::{BigRational, Ratio};
use num::traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot parse scalar {0:?}: expected canonical form like \"1/2\", \"3*r2\" or \"1/2-2/3*r2\"")]
    Parse(String),
}

/// An exact rational number.
#[derive(Clone)]
pub struct Rational(Repr);

#[derive(Clone)]
enum Repr {
    Small(Ratio<i64>),
    Big(BigRational),
}

impl Rational {
    pub fn zero() -> Self {
        Rational(Repr::Small(Ratio::from_integer(0)))
    }

    pub fn one() -> Self {
        Rational(Repr::Small(Ratio::from_integer(1)))
    }

    pub fn from_integer(n: i64) -> Self {
        Rational(Repr::Small(Ratio::from_integer(n)))
    }

    /// `numer / denom`, reduced. Panics if `denom == 0`.
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        if numer == i64::MIN || denom == i64::MIN {
            return Self::from_big(BigRational::new(numer.into(), denom.into()));
        }
        Rational(Repr::Small(Ratio::new(numer, denom)))
    }

    pub fn from_big(r: BigRational) -> Self {
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) if n != i64::MIN && d != i64::MIN => {
                Rational(Repr::Small(Ratio::new_raw(n, d)))
            }
            _ => Rational(Repr::Big(r)),
        }
    }

    pub fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(r) => {
                BigRational::new_raw(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
            }
            Repr::Big(r) => r.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.0 {
            Repr::Small(r) => r.numer() == &0,
            Repr::Big(r) => r.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        match &self.0 {
            Repr::Small(r) => r.numer() == &1 && r.denom() == &1,
            Repr::Big(r) => r.is_one(),
        }
    }

    pub fn signum(&self) -> i32 {
        match &self.0 {
            Repr::Small(r) => r.numer().signum() as i32,
            Repr::Big(r) => {
                if r.is_zero() {
                    0
                } else if r.is_positive() {
                    1
                } else {
                    -1
                }
            }
        }
    }

    pub fn numer_string(&self) -> String {
        match &self.0 {
            Repr::Small(r) => r.numer().to_string(),
            Repr::Big(r) => r.numer().to_string(),
        }
    }

    pub fn denom_string(&self) -> String {
        match &self.0 {
            Repr::Small(r) => r.denom().to_string(),
            Repr::Big(r) => r.denom().to_string(),
        }
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(r) => r.is_integer(),
            Repr::Big(r) => r.is_integer(),
        }
    }

    fn binary(
        &self,
        rhs: &Self,
        small: impl FnOnce(&Ratio<i64>, &Ratio<i64>) -> Option<Ratio<i64>>,
        big: impl FnOnce(BigRational, BigRational) -> BigRational,
    ) -> Self {
        if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &rhs.0) {
            if let Some(r) = small(a, b) {
                if *r.numer() != i64::MIN && *r.denom() != i64::MIN {
                    return Rational(Repr::Small(r));
                }
            }
        }
        Self::from_big(big(self.to_big(), rhs.to_big()))
    }

    pub fn add_ref(&self, rhs: &Self) -> Self {
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.clone();
        }
        self.binary(rhs, |a, b| a.checked_add(b), |a, b| a + b)
    }

    pub fn sub_ref(&self, rhs: &Self) -> Self {
        if rhs.is_zero() {
            return self.clone();
        }
        self.binary(rhs, |a, b| a.checked_sub(b), |a, b| a - b)
    }

    pub fn mul_ref(&self, rhs: &Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        if rhs.is_one() {
            return self.clone();
        }
        if self.is_one() {
            return rhs.clone();
        }
        self.binary(rhs, |a, b| a.checked_mul(b), |a, b| a * b)
    }

    /// Panics on division by zero; use [`Rational::checked_div`] otherwise.
    pub fn div_ref(&self, rhs: &Self) -> Self {
        self.checked_div(rhs).expect("rational division by zero")
    }

    pub fn checked_div(&self, rhs: &Self) -> Option<Self> {
        if rhs.is_zero() {
            return None;
        }
        if rhs.is_one() {
            return Some(self.clone());
        }
        Some(self.binary(rhs, |a, b| a.checked_div(b), |a, b| a / b))
    }

    pub fn neg_ref(&self) -> Self {
        match &self.0 {
            Repr::Small(r) => match r.numer().checked_neg() {
                Some(n) => Rational(Repr::Small(Ratio::new_raw(n, *r.denom()))),
                None => Self::from_big(-self.to_big()),
            },
            Repr::Big(r) => Self::from_big(-r.clone()),
        }
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        match (&self.0, &other.0) {
            (Repr::Small(a), Repr::Small(b)) => a == b,
            // Big values are always outside the i64 range after normalization.
            (Repr::Big(a), Repr::Big(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Rational {}

impl Hash for Rational {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match &self.0 {
            Repr::Small(r) => {
                0u8.hash(state);
                r.numer().hash(state);
                r.denom().hash(state);
            }
            Repr::Big(r) => {
                1u8.hash(state);
                r.numer().hash(state);
                r.denom().hash(state);
            }
        }
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a), Repr::Small(b)) => a.cmp(b),
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.numer_string())
        } else {
            write!(f, "{}/{}", self.numer_string(), self.denom_string())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = ScalarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ScalarError::Parse(s.to_string());
        let s = s.trim();
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let n: BigInt = n.parse().map_err(|_| err())?;
        let d: BigInt = d.parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        Ok(Rational::from_big(BigRational::new(n, d)))
    }
}

/// An element `a + b·√2` of Q(√2).
///
/// Equality is componentwise and exact; ordering is the real order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Scalar {
    a: Rational,
    b: Rational,
}

impl Scalar {
    pub fn new(a: Rational, b: Rational) -> Self {
        Scalar { a, b }
    }

    pub fn zero() -> Self {
        Scalar {
            a: Rational::zero(),
            b: Rational::zero(),
        }
    }

    pub fn one() -> Self {
        Scalar {
            a: Rational::one(),
            b: Rational::zero(),
        }
    }

    pub fn sqrt2() -> Self {
        Scalar {
            a: Rational::zero(),
            b: Rational::one(),
        }
    }

    pub fn from_integer(n: i64) -> Self {
        Scalar {
            a: Rational::from_integer(n),
            b: Rational::zero(),
        }
    }

    /// The rational `numer / denom`.
    pub fn ratio(numer: i64, denom: i64) -> Self {
        Scalar {
            a: Rational::new(numer, denom),
            b: Rational::zero(),
        }
    }

    pub fn from_rational(a: Rational) -> Self {
        Scalar {
            a,
            b: Rational::zero(),
        }
    }

    pub fn rational_part(&self) -> &Rational {
        &self.a
    }

    pub fn sqrt2_part(&self) -> &Rational {
        &self.b
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.a.is_one() && self.b.is_zero()
    }

    /// Sign of `a + b√2`, decided exactly by comparing `a²` with `2b²`.
    pub fn signum(&self) -> i32 {
        let sa = self.a.signum();
        let sb = self.b.signum();
        if sb == 0 {
            return sa;
        }
        if sa == 0 || sa == sb {
            return sb;
        }
        let a2 = self.a.mul_ref(&self.a);
        let two_b2 = self.b.mul_ref(&self.b).mul_ref(&Rational::from_integer(2));
        if a2 > two_b2 {
            sa
        } else {
            sb
        }
    }

    pub fn is_positive(&self) -> bool {
        self.signum() > 0
    }

    pub fn is_negative(&self) -> bool {
        self.signum() < 0
    }

    /// `1 / self`, via the conjugate `(a − b√2) / (a² − 2b²)`.
    pub fn recip(&self) -> Result<Self, ScalarError> {
        if self.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        if self.b.is_zero() {
            return Ok(Scalar::from_rational(Rational::one().div_ref(&self.a)));
        }
        let norm = self
            .a
            .mul_ref(&self.a)
            .sub_ref(&self.b.mul_ref(&self.b).mul_ref(&Rational::from_integer(2)));
        Ok(Scalar {
            a: self.a.div_ref(&norm),
            b: self.b.neg_ref().div_ref(&norm),
        })
    }

    pub fn checked_div(&self, rhs: &Scalar) -> Result<Self, ScalarError> {
        if rhs.b.is_zero() {
            let d = &rhs.a;
            if d.is_zero() {
                return Err(ScalarError::DivisionByZero);
            }
            return Ok(Scalar {
                a: self.a.div_ref(d),
                b: self.b.div_ref(d),
            });
        }
        Ok(self * &rhs.recip()?)
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Default for Scalar {
    fn default() -> Self {
        Scalar::zero()
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::from_integer(n)
    }
}

impl From<Rational> for Scalar {
    fn from(r: Rational) -> Self {
        Scalar::from_rational(r)
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.b.is_zero() && other.b.is_zero() {
            return self.a.cmp(&other.a);
        }
        match (self - other).signum() {
            0 => Ordering::Equal,
            s if s > 0 => Ordering::Greater,
            _ => Ordering::Less,
        }
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> Add<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        Scalar {
            a: self.a.add_ref(&rhs.a),
            b: self.b.add_ref(&rhs.b),
        }
    }
}

impl<'a> Sub<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        Scalar {
            a: self.a.sub_ref(&rhs.a),
            b: self.b.sub_ref(&rhs.b),
        }
    }
}

impl<'a> Mul<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        if self.b.is_zero() && rhs.b.is_zero() {
            return Scalar::from_rational(self.a.mul_ref(&rhs.a));
        }
        if rhs.b.is_zero() {
            return Scalar {
                a: self.a.mul_ref(&rhs.a),
                b: self.b.mul_ref(&rhs.a),
            };
        }
        if self.b.is_zero() {
            return Scalar {
                a: self.a.mul_ref(&rhs.a),
                b: self.a.mul_ref(&rhs.b),
            };
        }
        let two = Rational::from_integer(2);
        let a = self
            .a
            .mul_ref(&rhs.a)
            .add_ref(&self.b.mul_ref(&rhs.b).mul_ref(&two));
        let b = self.a.mul_ref(&rhs.b).add_ref(&self.b.mul_ref(&rhs.a));
        Scalar { a, b }
    }
}

/// Panics on division by zero; use [`Scalar::checked_div`] when the divisor may vanish.
impl<'a> Div<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn div(self, rhs: &Scalar) -> Scalar {
        self.checked_div(rhs).expect("scalar division by zero")
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar {
            a: self.a.neg_ref(),
            b: self.b.neg_ref(),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

macro_rules! forward_owned {
    ($($trait:ident :: $method:ident),*) => {$(
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $trait<&'a Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                (&self).$method(rhs)
            }
        }
        impl<'a> $trait<Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                self.$method(&rhs)
            }
        }
    )*};
}

forward_owned!(Add::add, Sub::sub, Mul::mul, Div::div);

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, rhs: &Scalar) {
        if rhs.is_zero() {
            return;
        }
        self.a = self.a.add_ref(&rhs.a);
        if !rhs.b.is_zero() {
            self.b = self.b.add_ref(&rhs.b);
        }
    }
}

impl AddAssign<Scalar> for Scalar {
    fn add_assign(&mut self, rhs: Scalar) {
        *self += &rhs;
    }
}

impl SubAssign<&Scalar> for Scalar {
    fn sub_assign(&mut self, rhs: &Scalar) {
        self.a = self.a.sub_ref(&rhs.a);
        self.b = self.b.sub_ref(&rhs.b);
    }
}

impl MulAssign<&Scalar> for Scalar {
    fn mul_assign(&mut self, rhs: &Scalar) {
        *self = &*self * rhs;
    }
}

impl Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        let mut acc = Scalar::zero();
        for x in iter {
            acc += &x;
        }
        acc
    }
}

impl<'a> Product<&'a Scalar> for Scalar {
    fn product<I: Iterator<Item = &'a Scalar>>(iter: I) -> Self {
        iter.fold(Scalar::one(), |acc, x| &acc * x)
    }
}

impl<'a> Sum<&'a Scalar> for Scalar {
    fn sum<I: Iterator<Item = &'a Scalar>>(iter: I) -> Scalar {
        let mut acc = Scalar::zero();
        for x in iter {
            acc += x;
        }
        acc
    }
}

/// Canonical text: `"a"`, `"b*r2"` or `"a+b*r2"` / `"a-|b|*r2"`, with
/// rationals written `p/q` (or `p` when integral).
impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a.is_zero(), self.b.is_zero()) {
            (_, true) => write!(f, "{}", self.a),
            (true, false) => write!(f, "{}*r2", self.b),
            (false, false) => {
                if self.b.signum() < 0 {
                    write!(f, "{}-{}*r2", self.a, self.b.neg_ref())
                } else {
                    write!(f, "{}+{}*r2", self.a, self.b)
                }
            }
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Scalar {
    type Err = ScalarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ScalarError::Parse(s.to_string());
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() {
            return Err(err());
        }
        let Some(body) = t.strip_suffix("r2") else {
            return Ok(Scalar::from_rational(t.parse().map_err(|_| err())?));
        };
        let (body, implicit_one) = match body.strip_suffix('*') {
            Some(b) => (b, false),
            None => (body, true),
        };
        // Split "a±b" at the last sign that is not the leading one.
        let split = body
            .char_indices()
            .filter(|&(i, c)| (c == '+' || c == '-') && (i > 0 || implicit_one))
            .map(|(i, _)| i)
            .next_back();
        let coefficient = |txt: &str| -> Result<Rational, ScalarError> {
            match (txt, implicit_one) {
                ("" | "+", true) => Ok(Rational::one()),
                ("-", true) => Ok(Rational::from_integer(-1)),
                (_, true) => Err(err()),
                _ => txt.parse().map_err(|_| err()),
            }
        };
        let (a, b) = match split {
            Some(i) => {
                let a: Rational = if i == 0 {
                    Rational::zero()
                } else {
                    body[..i].parse().map_err(|_| err())?
                };
                let b_txt = body[i..].strip_prefix('+').unwrap_or(&body[i..]);
                (a, coefficient(b_txt)?)
            }
            None => (Rational::zero(), coefficient(body)?),
        };
        Ok(Scalar { a, b })
    }
}

impl serde::Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Scalar {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
