//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! Two working precisions are provided: plain `f64` and [`Extended`], a
//! double-double type carrying roughly 31 significant decimal digits. All
//! series and derivative code is generic over [`Real`], so the same
//! summation order runs in either precision.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Working precision selector used by the CLI and the report layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Double,
    Extended,
}

impl Precision {
    pub fn as_str(self) -> &'static str {
        match self {
            Precision::Double => "double",
            Precision::Extended => "extended",
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "double" => Ok(Precision::Double),
            "extended" => Ok(Precision::Extended),
            other => Err(format!("unknown precision `{other}` (expected double or extended)")),
        }
    }
}

/// Real scalar with the handful of operations the series engine needs.
pub trait Real:
    Copy
    + Send
    + Sync
    + fmt::Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + 'static
{
    const PRECISION: Precision;

    /// Unit roundoff of the representation.
    const EPSILON: f64;

    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn abs(self) -> Self;
    /// `self^e` for `self > 0`.
    fn powf(self, e: Self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn is_finite(self) -> bool;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn from_u64(n: u64) -> Self {
        Self::from_f64(n as f64)
    }

    fn max_abs(self, other: Self) -> Self {
        let (a, b) = (self.abs(), other.abs());
        if a >= b {
            a
        } else {
            b
        }
    }
}

impl Real for f64 {
    const PRECISION: Precision = Precision::Double;
    const EPSILON: f64 = f64::EPSILON / 2.0;

    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn powf(self, e: Self) -> Self {
        f64::powf(self, e)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

/// Double-double scalar: an unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`,
/// giving about 31 significant decimal digits.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct Extended {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

const LN_2: Extended = Extended {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

impl Extended {
    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Extended { hi, lo }
    }

    fn mul_f64(self, b: f64) -> Self {
        let (p1, p2) = two_prod(self.hi, b);
        Extended::renorm(p1, p2 + self.lo * b)
    }

    fn nan() -> Self {
        Extended {
            hi: f64::NAN,
            lo: f64::NAN,
        }
    }

    /// exp(x) via reduction by ln 2 and 2^-10, then a Taylor series for
    /// expm1 on the reduced argument squared back up in expm1 form.
    pub fn exp(self) -> Self {
        let hi = self.hi;
        if hi.is_nan() {
            return Extended::nan();
        }
        if hi > 709.7 {
            return Extended::from_f64(f64::INFINITY);
        }
        if hi < -745.0 {
            return Extended::zero();
        }
        let k = (hi / std::f64::consts::LN_2).round();
        let r = (self - LN_2.mul_f64(k)).mul_f64(1.0 / 1024.0);

        // expm1(r), |r| <= 3.4e-4
        let mut term = r;
        let mut sum = r;
        for n in 2..=12u32 {
            term = (term * r) / Extended::from_f64(f64::from(n));
            sum += term;
        }
        let two = Extended::from_f64(2.0);
        for _ in 0..10 {
            sum = sum * (sum + two);
        }
        let scaled = sum + Extended::one();
        let factor = 2f64.powi(k as i32);
        Extended {
            hi: scaled.hi * factor,
            lo: scaled.lo * factor,
        }
    }

    /// Natural log of a positive value, one Newton step on `exp` from the
    /// double-precision estimate.
    pub fn ln(self) -> Self {
        let hi = self.hi;
        if hi <= 0.0 || hi.is_nan() {
            return Extended::nan();
        }
        if hi.is_infinite() {
            return Extended::from_f64(f64::INFINITY);
        }
        let x0 = Extended::from_f64(hi.ln());
        x0 + self * (-x0).exp() - Extended::one()
    }
}

impl fmt::Debug for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Extended({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.hi + self.lo)
    }
}

impl PartialOrd for Extended {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(std::cmp::Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl Add for Extended {
    type Output = Extended;
    #[inline]
    fn add(self, b: Extended) -> Extended {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        Extended::renorm(s1, s2 + t2)
    }
}

impl Neg for Extended {
    type Output = Extended;
    #[inline]
    fn neg(self) -> Extended {
        Extended {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Extended {
    type Output = Extended;
    #[inline]
    fn sub(self, b: Extended) -> Extended {
        self + (-b)
    }
}

impl Mul for Extended {
    type Output = Extended;
    #[inline]
    fn mul(self, b: Extended) -> Extended {
        let (p1, p2) = two_prod(self.hi, b.hi);
        Extended::renorm(p1, p2 + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Div for Extended {
    type Output = Extended;
    #[inline]
    fn div(self, b: Extended) -> Extended {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        Extended::renorm(q1, q2) + Extended::from_f64(q3)
    }
}

macro_rules! assign_op {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr for Extended {
            #[inline]
            fn $method(&mut self, rhs: Extended) {
                *self = *self $op rhs;
            }
        }
    };
}

assign_op!(AddAssign, add_assign, +);
assign_op!(SubAssign, sub_assign, -);
assign_op!(MulAssign, mul_assign, *);
assign_op!(DivAssign, div_assign, /);

impl Sum for Extended {
    fn sum<I: Iterator<Item = Extended>>(iter: I) -> Extended {
        iter.fold(Extended::zero(), |acc, v| acc + v)
    }
}

impl Real for Extended {
    const PRECISION: Precision = Precision::Extended;
    const EPSILON: f64 = 1.0e-32;

    fn from_f64(v: f64) -> Self {
        Extended { hi: v, lo: 0.0 }
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    fn powf(self, e: Self) -> Self {
        if e == Extended::zero() {
            return Extended::one();
        }
        if self == Extended::zero() {
            return Extended::zero();
        }
        (e * self.ln()).exp()
    }

    fn powi(self, n: i32) -> Self {
        let mut base = if n < 0 { Extended::one() / self } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Extended::one();
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            e >>= 1;
            if e > 0 {
                base = base * base;
            }
        }
        acc
    }

    fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }
}
