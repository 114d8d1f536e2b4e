//! Scalar abstraction shared by the float and exact-rational back ends.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::marker::PhantomData;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

/// Products of contraction ratios and probabilities.
///
/// Floats keep the natural log so that deep words do not underflow; the
/// rational back end keeps the exact value.
pub trait Magnitude: Clone + Debug + Send + Sync {
    type Key: Clone + Ord + Hash + Debug + Send + Sync;

    fn unit() -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    /// Comparison with the scalar's tie policy: values within tolerance are `Equal`.
    fn cmp_tol(&self, other: &Self) -> Ordering;
    fn ln(&self) -> f64;
    /// Bucketed key, used to merge equal states in dynamic programs.
    fn key(&self) -> Self::Key;
    /// `self^e`, or `None` when the back end cannot represent it exactly.
    fn powf(&self, e: f64) -> Option<Self>;

    /// `self > other` beyond tolerance.
    fn gt(&self, other: &Self) -> bool {
        self.cmp_tol(other) == Ordering::Greater
    }
    /// `self >= other` up to tolerance.
    fn ge(&self, other: &Self) -> bool {
        self.cmp_tol(other) != Ordering::Less
    }
}

pub trait FloatKind: Send + Sync + 'static {
    const LOG_EPS: f64;
}

/// Log-domain magnitude for the float back ends.
pub struct LogMag<K: FloatKind> {
    pub ln: f64,
    _kind: PhantomData<fn() -> K>,
}

impl<K: FloatKind> LogMag<K> {
    pub fn from_ln(ln: f64) -> Self {
        LogMag { ln, _kind: PhantomData }
    }
}

impl<K: FloatKind> Clone for LogMag<K> {
    fn clone(&self) -> Self {
        Self::from_ln(self.ln)
    }
}

impl<K: FloatKind> Debug for LogMag<K> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "exp({})", self.ln)
    }
}

const KEY_BUCKET: f64 = 1e-10;

impl<K: FloatKind> Magnitude for LogMag<K> {
    type Key = i64;

    fn unit() -> Self {
        Self::from_ln(0.0)
    }
    fn mul(&self, other: &Self) -> Self {
        Self::from_ln(self.ln + other.ln)
    }
    fn div(&self, other: &Self) -> Self {
        Self::from_ln(self.ln - other.ln)
    }
    fn cmp_tol(&self, other: &Self) -> Ordering {
        let d = self.ln - other.ln;
        let tol = K::LOG_EPS * (1.0 + self.ln.abs().max(other.ln.abs()));
        if d > tol {
            Ordering::Greater
        } else if d < -tol {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
    fn ln(&self) -> f64 {
        self.ln
    }
    fn key(&self) -> i64 {
        (self.ln / KEY_BUCKET).round() as i64
    }
    fn powf(&self, e: f64) -> Option<Self> {
        Some(Self::from_ln(self.ln * e))
    }
}

/// Exact magnitude for the rational back end.
#[derive(Clone, Debug)]
pub struct ExactMag(pub BigRational);

impl Magnitude for ExactMag {
    type Key = BigRational;

    fn unit() -> Self {
        ExactMag(BigRational::one())
    }
    fn mul(&self, other: &Self) -> Self {
        ExactMag(&self.0 * &other.0)
    }
    fn div(&self, other: &Self) -> Self {
        ExactMag(&self.0 / &other.0)
    }
    fn cmp_tol(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
    fn ln(&self) -> f64 {
        rational_ln(&self.0)
    }
    fn key(&self) -> BigRational {
        self.0.clone()
    }
    fn powf(&self, e: f64) -> Option<Self> {
        if e.fract() != 0.0 || e.abs() > i32::MAX as f64 {
            return None;
        }
        Some(ExactMag(num_traits::pow::Pow::pow(&self.0, e as i32)))
    }
}

/// Field used for carpet parameters and rectangle coordinates.
pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Num + Neg<Output = Self> + Send + Sync + 'static
{
    type Mag: Magnitude;
    /// True when arithmetic and comparisons are exact.
    const EXACT: bool;

    fn from_f64(x: f64) -> Option<Self>;
    fn from_ratio(num: i64, den: i64) -> Self;
    /// Parses a decimal literal (`0.25`, `1e-3`) or a fraction `p/q`.
    fn parse_literal(s: &str) -> Option<Self>;
    fn to_f64(&self) -> f64;
    /// Magnitude of a positive value.
    fn mag(&self) -> Self::Mag;
    /// Slack for non-strict validity checks; zero in exact mode.
    fn tol() -> Self;

    fn ln(&self) -> f64 {
        self.mag().ln()
    }
    fn from_usize(n: usize) -> Self {
        Self::from_ratio(n as i64, 1)
    }
    fn max_of(a: &Self, b: &Self) -> Self {
        if a >= b {
            a.clone()
        } else {
            b.clone()
        }
    }
    fn min_of(a: &Self, b: &Self) -> Self {
        if a <= b {
            a.clone()
        } else {
            b.clone()
        }
    }
}

/// `x <= y` up to the scalar tolerance.
pub fn le_tol<S: Scalar>(x: &S, y: &S) -> bool {
    *x <= y.clone() + S::tol()
}

/// `x < y` beyond the scalar tolerance.
pub fn lt_tol<S: Scalar>(x: &S, y: &S) -> bool {
    x.clone() + S::tol() < *y
}

pub struct F64Kind;
impl FloatKind for F64Kind {
    const LOG_EPS: f64 = 1e-12;
}

pub struct F32Kind;
impl FloatKind for F32Kind {
    const LOG_EPS: f64 = 1e-5;
}

impl Scalar for f64 {
    type Mag = LogMag<F64Kind>;
    const EXACT: bool = false;

    fn from_f64(x: f64) -> Option<Self> {
        x.is_finite().then_some(x)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn parse_literal(s: &str) -> Option<Self> {
        parse_fraction(s)
            .map(|(n, d)| n / d)
            .or_else(|| s.trim().parse::<f64>().ok())
            .filter(|x| x.is_finite())
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn mag(&self) -> Self::Mag {
        LogMag::from_ln(f64::ln(*self))
    }
    fn tol() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    type Mag = LogMag<F32Kind>;
    const EXACT: bool = false;

    fn from_f64(x: f64) -> Option<Self> {
        let y = x as f32;
        y.is_finite().then_some(y)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        (num as f64 / den as f64) as f32
    }
    fn parse_literal(s: &str) -> Option<Self> {
        f64::parse_literal(s).and_then(<f32 as Scalar>::from_f64)
    }
    fn to_f64(&self) -> f64 {
        *self as f64
    }
    fn mag(&self) -> Self::Mag {
        LogMag::from_ln((*self as f64).ln())
    }
    fn tol() -> Self {
        1e-6
    }
}

impl Scalar for BigRational {
    type Mag = ExactMag;
    const EXACT: bool = true;

    fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn parse_literal(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n = parse_decimal_exact(n)?;
            let d = parse_decimal_exact(d)?;
            if d.is_zero() {
                return None;
            }
            return Some(n / d);
        }
        parse_decimal_exact(s)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| rational_ln(self).exp())
    }
    fn mag(&self) -> Self::Mag {
        ExactMag(self.clone())
    }
    fn tol() -> Self {
        BigRational::zero()
    }
}

fn parse_fraction(s: &str) -> Option<(f64, f64)> {
    let (n, d) = s.trim().split_once('/')?;
    let n: f64 = n.trim().parse().ok()?;
    let d: f64 = d.trim().parse().ok()?;
    (d != 0.0).then_some((n, d))
}

/// Exact value of a decimal literal with optional exponent.
pub fn parse_decimal_exact(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(k) => (&s[..k], s[k + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.as_bytes().first()? {
        b'-' => (true, &mantissa[1..]),
        b'+' => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let r = if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Some(r)
}

fn bigint_ln(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        x.to_f64().unwrap_or(f64::NAN).abs().ln()
    } else {
        let shift = bits - 64;
        let top: BigInt = x.abs() >> shift;
        top.to_f64().unwrap_or(f64::NAN).ln() + shift as f64 * std::f64::consts::LN_2
    }
}

/// Natural log of a positive rational without overflowing the f64 range.
pub fn rational_ln(x: &BigRational) -> f64 {
    if !x.is_positive() {
        return if x.is_zero() { f64::NEG_INFINITY } else { f64::NAN };
    }
    bigint_ln(x.numer()) - bigint_ln(x.denom())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        <BigRational as Scalar>::from_ratio(n, d)
    }

    #[test]
    fn decimal_literals_parse_exactly() {
        assert_eq!(parse_decimal_exact("0.125"), Some(q(1, 8)));
        assert_eq!(parse_decimal_exact("1e-3"), Some(q(1, 1000)));
        assert_eq!(parse_decimal_exact("-2.5E1"), Some(q(-25, 1)));
        assert_eq!(parse_decimal_exact(".5"), Some(q(1, 2)));
        assert_eq!(BigRational::parse_literal("1/3"), Some(q(1, 3)));
        assert_eq!(parse_decimal_exact("abc"), None);
        assert_eq!(parse_decimal_exact("."), None);
    }

    #[test]
    fn float_literals() {
        assert_eq!(f64::parse_literal("1/4"), Some(0.25));
        assert_eq!(f64::parse_literal("0.3"), Some(0.3));
        assert_eq!(f64::parse_literal("1/0"), None);
    }

    #[test]
    fn log_mag_ties_are_equal() {
        let a = 0.1f64.mag().mul(&0.2f64.mag());
        let b = 0.02f64.mag();
        assert_eq!(a.cmp_tol(&b), Ordering::Equal);
        assert!(a.ge(&b) && !a.gt(&b));
        assert_eq!(0.5f64.mag().cmp_tol(&0.25f64.mag()), Ordering::Greater);
    }

    #[test]
    fn rational_ln_huge_values() {
        let big = BigRational::from_integer(num_traits::pow(BigInt::from(3), 2000));
        let expected = 2000.0 * 3f64.ln();
        assert!((rational_ln(&big) - expected).abs() < 1e-9);
        assert!((rational_ln(&big.recip()) + expected).abs() < 1e-9);
    }

    #[test]
    fn exact_mag_is_exact() {
        let third = q(1, 3);
        let p = third.mag().mul(&third.mag()).mul(&third.mag());
        assert_eq!(p.cmp_tol(&q(1, 27).mag()), Ordering::Equal);
        let nudged = q(1, 27) + q(1, 1_000_000_000_000);
        assert_eq!(p.cmp_tol(&nudged.mag()), Ordering::Less);
    }
}
