//! Dual-mode arithmetic: exact arbitrary-precision rationals where the input
//! data is rational, binary64 otherwise.
//!
//! A tableau is homogeneous in one [`Mode`]; every quantity derived from it
//! (defects, condition residuals, stability polynomials) inherits that mode.
//! Mixed operations promote to float, so an accidental mode mixture degrades
//! gracefully instead of panicking, but the constructors in
//! [`crate::tableau`] never produce mixed data.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic mode of a tableau and everything derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Exact arbitrary-precision rational arithmetic; "zero" means zero.
    Exact,
    /// binary64; "zero" means `|x| <= tol`.
    Float,
}

/// A number that is either an exact rational or a binary64 float.
#[derive(Debug, Clone)]
pub enum Scalar {
    Exact(BigRational),
    Float(f64),
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar::Exact(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Scalar::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    /// Exact fraction `p/q`. Panics if `q == 0`.
    pub fn ratio(p: i64, q: i64) -> Self {
        assert!(q != 0, "zero denominator");
        Scalar::Exact(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn from_f64(x: f64) -> Self {
        Scalar::Float(x)
    }

    pub fn mode(&self) -> Mode {
        match self {
            Scalar::Exact(_) => Mode::Exact,
            Scalar::Float(_) => Mode::Float,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Scalar::Float(x) => *x,
        }
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r.abs()),
            Scalar::Float(x) => Scalar::Float(x.abs()),
        }
    }

    /// Zero test honoring the mode: exact zero, or `|x| <= tol` for floats.
    pub fn is_zero(&self, tol: f64) -> bool {
        match self {
            Scalar::Exact(r) => r.is_zero(),
            Scalar::Float(x) => x.abs() <= tol,
        }
    }

    /// Magnitude as a float, for reporting residual sizes.
    pub fn magnitude(&self) -> f64 {
        self.to_f64().abs()
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Float(_) => None,
        }
    }

    /// Demote to the float representation.
    pub fn to_float_scalar(&self) -> Scalar {
        Scalar::Float(self.to_f64())
    }

    /// Parse a tableau entry: an integer, a `p/q` fraction (exact), or a
    /// decimal/scientific literal (float).
    pub fn parse(text: &str) -> Result<Scalar, ParseScalarError> {
        let t = text.trim();
        if t.is_empty() {
            return Err(ParseScalarError(text.to_string()));
        }
        if let Some((p, q)) = t.split_once('/') {
            let num: BigInt = p.trim().parse().map_err(|_| ParseScalarError(text.to_string()))?;
            let den: BigInt = q.trim().parse().map_err(|_| ParseScalarError(text.to_string()))?;
            if den.is_zero() {
                return Err(ParseScalarError(text.to_string()));
            }
            return Ok(Scalar::Exact(BigRational::new(num, den)));
        }
        if let Ok(n) = t.parse::<BigInt>() {
            return Ok(Scalar::Exact(BigRational::from_integer(n)));
        }
        t.parse::<f64>()
            .map(Scalar::Float)
            .map_err(|_| ParseScalarError(text.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unparseable numeric entry `{0}`")]
pub struct ParseScalarError(pub String);

impl fmt::Display for Scalar {
    /// Rational entries print as `p` or `p/q` and round-trip bit-exactly;
    /// floats print with enough digits to round-trip.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Float(x) => write!(f, "{x:?}"),
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
            (a, b) => a.to_f64() == b.to_f64(),
        }
    }
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a.$method(b)),
                    (a, b) => Scalar::Float(a.to_f64().$method(b.to_f64())),
                }
            }
        }
        impl $trait for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
    };
}

scalar_binop!(Add, add);
scalar_binop!(Sub, sub);
scalar_binop!(Mul, mul);
scalar_binop!(Div, div);

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(-r),
            Scalar::Float(x) => Scalar::Float(-x),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}
