//! Scalar abstraction shared by the exact and floating-point paths.
//!
//! Every operator, pmf and check in this crate is generic over [`Scalar`].
//! The exact instance is [`BigRational`]; `f64` and `f32` give the float
//! fallback, where equality becomes a relative-tolerance comparison.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// True when arithmetic is exact and `close` is plain equality.
    const EXACT: bool;

    fn from_rational(r: &BigRational) -> Self;

    fn from_u64(n: u64) -> Self;

    fn from_i64(n: i64) -> Self {
        if n < 0 {
            -Self::from_u64(n.unsigned_abs())
        } else {
            Self::from_u64(n as u64)
        }
    }

    fn to_f64(&self) -> f64;

    fn powi(&self, exp: i32) -> Self;

    /// `self^exp` for a rational exponent. Exact scalars only support
    /// integer exponents and return `None` otherwise.
    fn powr(&self, exp: &BigRational) -> Option<Self>;

    /// Equality up to `tol` relative error; `tol` is ignored when exact.
    fn close(&self, other: &Self, tol: f64) -> bool;

    fn is_negligible(&self, tol: f64) -> bool {
        self.close(&Self::zero(), tol)
    }

    fn abs_f64(&self) -> f64 {
        self.to_f64().abs()
    }

    /// Rendering used in reports: `p/q` for rationals, shortest round-trip
    /// decimal for floats.
    fn render(&self) -> String;
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn from_u64(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn to_f64(&self) -> f64 {
        // numer/denom can both overflow f64 even when the ratio is modest.
        match (self.numer().to_f64(), self.denom().to_f64()) {
            (Some(p), Some(q)) if p.is_finite() && q.is_finite() => p / q,
            _ => {
                let bits = self.numer().bits().max(self.denom().bits()) as i64;
                let shift = (bits - 900).max(0) as usize;
                let p = (self.numer() >> shift).to_f64().unwrap_or(f64::NAN);
                let q = (self.denom() >> shift).to_f64().unwrap_or(f64::NAN);
                p / q
            }
        }
    }

    fn powi(&self, exp: i32) -> Self {
        num_traits::Pow::pow(self, exp)
    }

    fn powr(&self, exp: &BigRational) -> Option<Self> {
        if !exp.is_integer() {
            return None;
        }
        let e = exp.to_integer().to_i32()?;
        Some(Scalar::powi(self, e))
    }

    fn close(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }

    fn abs_f64(&self) -> f64 {
        Scalar::to_f64(&self.abs())
    }

    fn render(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn from_rational(r: &BigRational) -> Self {
                Scalar::to_f64(r) as $t
            }

            fn from_u64(n: u64) -> Self {
                n as $t
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn powi(&self, exp: i32) -> Self {
                <$t>::powi(*self, exp)
            }

            fn powr(&self, exp: &BigRational) -> Option<Self> {
                Some(<$t>::powf(*self, Scalar::to_f64(exp) as $t))
            }

            fn close(&self, other: &Self, tol: f64) -> bool {
                let (a, b) = (*self as f64, *other as f64);
                let scale = 1f64.max(a.abs()).max(b.abs());
                (a - b).abs() <= tol * scale
            }

            fn render(&self) -> String {
                format!("{:?}", self)
            }
        }
    };
}

float_scalar!(f64);
float_scalar!(f32);

/// Shorthand for building an exact rational `p/q`.
pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Shorthand for an exact integer.
pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Parses `-3`, `3/2`, `1.25` or `-0.5/3` without rounding.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    fn decimal(s: &str) -> Option<BigRational> {
        let (neg, digits) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
        if whole.is_empty() && frac.is_empty() {
            return None;
        }
        if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
            return None;
        }
        let mantissa: BigInt = format!("0{whole}{frac}").parse().ok()?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let v = BigRational::new(mantissa, scale);
        Some(if neg { -v } else { v })
    }
    let text = text.trim();
    match text.split_once('/') {
        Some((p, q)) => {
            let q = decimal(q.trim())?;
            (!q.is_zero()).then(|| decimal(p.trim()).map(|p| p / q))?
        }
        None => decimal(text),
    }
}

/// Rising factorial `x (x+1) ... (x+m-1)`.
pub fn rising<T: Scalar>(x: &T, m: u32) -> T {
    let mut acc = T::one();
    for i in 0..m {
        acc = acc * (x.clone() + T::from_u64(i as u64));
    }
    acc
}

/// Falling factorial `n (n-1) ... (n-k+1)`, zero when `k > n`.
pub fn falling<T: Scalar>(n: u32, k: u32) -> T {
    if k > n {
        return T::zero();
    }
    let mut acc = T::one();
    for i in 0..k {
        acc = acc * T::from_u64((n - i) as u64);
    }
    acc
}

pub fn factorial<T: Scalar>(n: u32) -> T {
    falling(n, n)
}

/// Binomial coefficient, zero when `k > n`.
pub fn binomial<T: Scalar>(n: u32, k: u32) -> T {
    if k > n {
        return T::zero();
    }
    let k = k.min(n - k);
    let mut acc = T::one();
    for i in 0..k {
        acc = acc * T::from_u64((n - i) as u64) / T::from_u64((i + 1) as u64);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_literals() {
        assert_eq!(parse_rational("3/2"), Some(ratio(3, 2)));
        assert_eq!(parse_rational(" 1.5 "), Some(ratio(3, 2)));
        assert_eq!(parse_rational("-0.125"), Some(ratio(-1, 8)));
        assert_eq!(parse_rational(".5"), Some(ratio(1, 2)));
        assert_eq!(parse_rational("0.1"), Some(ratio(1, 10)));
        assert_eq!(parse_rational("7"), Some(int(7)));
        assert_eq!(parse_rational("1.5/3"), Some(ratio(1, 2)));
        for bad in ["", "1/0", "a", "1..2", "1e3", "-", "."] {
            assert_eq!(parse_rational(bad), None, "{bad}");
        }
    }

    #[test]
    fn rational_render_and_conversion() {
        assert_eq!(ratio(6, 4).render(), "3/2");
        assert_eq!(int(-3).render(), "-3");
        assert_eq!(Scalar::to_f64(&ratio(1, 4)), 0.25);
        assert_eq!(<BigRational as Scalar>::from_i64(-7), int(-7));
    }

    #[test]
    fn huge_rational_to_f64_does_not_overflow() {
        let big = BigRational::new(BigInt::from(10).pow(400) * 3, BigInt::from(10).pow(400) * 4);
        assert!((Scalar::to_f64(&big) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn float_close_is_relative() {
        assert!(1.0e6f64.close(&(1.0e6 + 1e-7), 1e-12));
        assert!(!1.0f64.close(&1.001, 1e-12));
        // exact comparison ignores the tolerance entirely
        assert!(ratio(1, 3).close(&ratio(2, 6), 0.0));
        assert!(!ratio(1, 3).close(&ratio(333, 1000), 1.0));
    }

    #[test]
    fn combinatorial_helpers() {
        assert_eq!(rising(&int(2), 3), int(24));
        assert_eq!(falling::<BigRational>(5, 2), int(20));
        assert_eq!(falling::<BigRational>(2, 5), int(0));
        assert_eq!(binomial::<BigRational>(30, 15), int(155_117_520));
        assert_eq!(binomial::<BigRational>(3, 4), int(0));
        assert_eq!(factorial::<BigRational>(0), int(1));
        assert_eq!(rising(&ratio(1, 2), 2), ratio(3, 4));
    }

    #[test]
    fn powr_exact_requires_integer_exponent() {
        assert_eq!(ratio(1, 2).powr(&int(3)), Some(ratio(1, 8)));
        assert_eq!(ratio(1, 2).powr(&ratio(1, 2)), None);
        assert!((0.25f64.powr(&ratio(1, 2)).unwrap() - 0.5).abs() < 1e-15);
    }
}
