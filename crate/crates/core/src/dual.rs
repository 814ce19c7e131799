//! Forward-mode dual numbers carrying a single tangent.
//!
//! The tangent is the derivative with respect to the one differentiated
//! design parameter (the detector inner radius). Constants carry a zero
//! tangent; the seed parameter carries a unit tangent.

use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Dual {
    pub value: f64,
    pub tangent: f64,
}

impl Dual {
    #[inline]
    pub const fn new(value: f64, tangent: f64) -> Self {
        Self { value, tangent }
    }

    /// A constant: tangent exactly zero.
    #[inline]
    pub const fn constant(value: f64) -> Self {
        Self { value, tangent: 0.0 }
    }

    /// The differentiated parameter: tangent exactly one.
    #[inline]
    pub const fn seed(value: f64) -> Self {
        Self { value, tangent: 1.0 }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.value.is_finite() && self.tangent.is_finite()
    }

    /// Logistic sigmoid, evaluated without overflow for large |x|.
    #[inline]
    pub fn sigmoid(self) -> Self {
        let s = if self.value >= 0.0 {
            1.0 / (1.0 + (-self.value).exp())
        } else {
            let e = self.value.exp();
            e / (1.0 + e)
        };
        Self::new(s, self.tangent * s * (1.0 - s))
    }

    #[inline]
    pub fn sin(self) -> Self {
        Self::new(self.value.sin(), self.tangent * self.value.cos())
    }

    #[inline]
    pub fn cos(self) -> Self {
        Self::new(self.value.cos(), -self.tangent * self.value.sin())
    }

    #[inline]
    pub fn exp(self) -> Self {
        let e = self.value.exp();
        Self::new(e, self.tangent * e)
    }

    pub fn ln(self) -> Result<Self> {
        if !(self.value > 0.0) {
            return Err(domain("ln", format!("argument {} must be positive", self.value)));
        }
        Ok(Self::new(self.value.ln(), self.tangent / self.value))
    }

    pub fn sqrt(self) -> Result<Self> {
        if !(self.value > 0.0) {
            return Err(domain("sqrt", format!("argument {} must be positive", self.value)));
        }
        let s = self.value.sqrt();
        Ok(Self::new(s, self.tangent / (2.0 * s)))
    }

    /// Two-argument arctangent `atan2(self, x)`, i.e. the angle of `(x, self)`.
    pub fn atan2(self, x: Self) -> Result<Self> {
        let denom = self.value * self.value + x.value * x.value;
        if denom == 0.0 {
            return Err(domain("atan2", "both arguments are zero".into()));
        }
        let tangent = (x.value * self.tangent - self.value * x.tangent) / denom;
        Ok(Self::new(self.value.atan2(x.value), tangent))
    }

    pub fn checked_div(self, rhs: Self) -> Result<Self> {
        if rhs.value == 0.0 {
            return Err(domain("div", "divisor is zero".into()));
        }
        Ok(self / rhs)
    }

    /// Clamp the value into `[lo, hi]`. A clamped result is constant.
    #[inline]
    pub fn clamp(self, lo: f64, hi: f64) -> Self {
        if self.value < lo {
            Self::constant(lo)
        } else if self.value > hi {
            Self::constant(hi)
        } else {
            self
        }
    }
}

fn domain(op: &'static str, detail: String) -> Error {
    Error::InvalidDomain { op, detail }
}

impl From<f64> for Dual {
    fn from(value: f64) -> Self {
        Self::constant(value)
    }
}

impl Add for Dual {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.value + rhs.value, self.tangent + rhs.tangent)
    }
}

impl Sub for Dual {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.value - rhs.value, self.tangent - rhs.tangent)
    }
}

impl Mul for Dual {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.value * rhs.value,
            self.tangent * rhs.value + self.value * rhs.tangent,
        )
    }
}

/// Unchecked quotient; use [`Dual::checked_div`] when the divisor may vanish.
impl Div for Dual {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let v = self.value / rhs.value;
        Self::new(v, (self.tangent - v * rhs.tangent) / rhs.value)
    }
}

impl Neg for Dual {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.value, -self.tangent)
    }
}

impl Add<f64> for Dual {
    type Output = Self;
    #[inline]
    fn add(self, rhs: f64) -> Self {
        Self::new(self.value + rhs, self.tangent)
    }
}

impl Sub<f64> for Dual {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: f64) -> Self {
        Self::new(self.value - rhs, self.tangent)
    }
}

impl Mul<f64> for Dual {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.value * rhs, self.tangent * rhs)
    }
}

impl Mul<Dual> for f64 {
    type Output = Dual;
    #[inline]
    fn mul(self, rhs: Dual) -> Dual {
        rhs * self
    }
}

impl Sub<Dual> for f64 {
    type Output = Dual;
    #[inline]
    fn sub(self, rhs: Dual) -> Dual {
        Dual::new(self - rhs.value, -rhs.tangent)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn sigmoid_at_zero() {
        assert_eq!(Dual::new(0.0, 1.0).sigmoid(), Dual::new(0.5, 0.25));
    }

    #[test]
    fn product_with_constant() {
        assert_eq!(Dual::new(2.0, 1.0) * Dual::new(3.0, 0.0), Dual::new(6.0, 3.0));
    }

    #[test]
    fn sin_at_half_pi() {
        let s = Dual::new(FRAC_PI_2, 1.0).sin();
        assert_eq!(s.value, 1.0);
        assert!(s.tangent.abs() < 1e-15);
    }

    #[test]
    fn sigmoid_saturates_without_nan() {
        let hi = Dual::seed(800.0).sigmoid();
        let lo = Dual::seed(-800.0).sigmoid();
        assert!(hi.is_finite() && lo.is_finite());
        assert_eq!(hi.value, 1.0);
        assert_eq!(lo.value, 0.0);
    }

    #[test]
    fn domain_errors_name_the_operation() {
        let err = Dual::constant(-1.0).sqrt().unwrap_err();
        assert!(matches!(err, Error::InvalidDomain { op: "sqrt", .. }));
        let err = Dual::seed(1.0).checked_div(Dual::constant(0.0)).unwrap_err();
        assert!(matches!(err, Error::InvalidDomain { op: "div", .. }));
        let err = Dual::constant(0.0).atan2(Dual::constant(0.0)).unwrap_err();
        assert!(matches!(err, Error::InvalidDomain { op: "atan2", .. }));
    }

    #[test]
    fn clamp_drops_tangent_only_when_clamped() {
        assert_eq!(Dual::seed(0.3).clamp(0.0, 1.0), Dual::seed(0.3));
        assert_eq!(Dual::seed(-0.3).clamp(0.0, 1.0), Dual::constant(0.0));
    }

    // A composition touching every elementary op.
    fn composite(x: Dual) -> Dual {
        let a = (x * 1.3 + 0.2).sin() * x.cos();
        let b = (x * x + 1.0).sqrt().unwrap();
        let c = (x * 0.7).exp().sigmoid();
        let d = (x - 0.1).atan2(x * 0.5 + 2.0).unwrap();
        (a + b * c - d) / (x * x + 0.5)
    }

    fn composite_f64(x: f64) -> f64 {
        composite(Dual::constant(x)).value
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn tangent_matches_central_difference(x in -3.0f64..3.0) {
            let h = 1e-6;
            let fd = (composite_f64(x + h) - composite_f64(x - h)) / (2.0 * h);
            let ad = composite(Dual::seed(x)).tangent;
            let rel = (ad - fd).abs() / ad.abs().max(1.0);
            prop_assert!(rel < 1e-6, "x={x} ad={ad} fd={fd}");
        }

        #[test]
        fn zero_seed_stays_zero(x in -3.0f64..3.0) {
            prop_assert_eq!(composite(Dual::constant(x)).tangent, 0.0);
        }
    }
}
