use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::Float;

/// A complex number stored as `mant * exp(expo)` with a real exponent.
///
/// Products and quotients combine exponents exactly; sums align to the
/// larger exponent. The mantissa is renormalised so `|mant|` stays near one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled<T> {
    pub mant: Complex<T>,
    pub expo: T,
}

impl<T: Float> Scaled<T> {
    pub fn zero() -> Self {
        Self { mant: Complex::new(T::zero(), T::zero()), expo: T::zero() }
    }

    pub fn one() -> Self {
        Self::from_complex(Complex::new(T::one(), T::zero()))
    }

    pub fn from_complex(z: Complex<T>) -> Self {
        Self { mant: z, expo: T::zero() }.normalized()
    }

    pub fn from_real(x: T) -> Self {
        Self::from_complex(Complex::new(x, T::zero()))
    }

    /// `exp(w)` for complex `w`, never overflowing.
    pub fn exp(w: Complex<T>) -> Self {
        Self { mant: Complex::new(w.im.cos(), w.im.sin()), expo: w.re }
    }

    /// `exp(w) * z`.
    pub fn exp_times(w: Complex<T>, z: Complex<T>) -> Self {
        (Self::exp(w) * z).normalized()
    }

    pub fn is_zero(&self) -> bool {
        self.mant.re == T::zero() && self.mant.im == T::zero()
    }

    pub(crate) fn normalized(self) -> Self {
        let m = self.mant.norm();
        if m == T::zero() || !m.is_finite() {
            return if m == T::zero() { Self::zero() } else { self };
        }
        let l = m.ln();
        let lo = T::from(-8.0).unwrap();
        let hi = T::from(8.0).unwrap();
        if l < lo || l > hi {
            Self { mant: self.mant / m, expo: self.expo + l }
        } else {
            self
        }
    }

    /// Natural logarithm of the modulus; `-inf` for zero.
    pub fn ln_abs(&self) -> T {
        if self.is_zero() {
            T::neg_infinity()
        } else {
            self.mant.norm().ln() + self.expo
        }
    }

    pub fn abs(&self) -> T {
        self.ln_abs().exp()
    }

    /// Plain complex value; may overflow to infinity or underflow to zero.
    pub fn to_complex(&self) -> Complex<T> {
        if self.is_zero() {
            return self.mant;
        }
        self.mant * self.expo.exp()
    }

    pub fn recip(&self) -> Self {
        Self { mant: self.mant.inv(), expo: -self.expo }.normalized()
    }

    pub fn powi(&self, n: i32) -> Self {
        Self { mant: self.mant.powi(n), expo: self.expo * T::from(n).unwrap() }.normalized()
    }

    /// Principal square root of the mantissa with the exponent halved.
    pub fn sqrt(&self) -> Self {
        let two = T::one() + T::one();
        Self { mant: super::sqrt_off_cut(self.mant), expo: self.expo / two }.normalized()
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return *other;
        }
        if other.is_zero() {
            return *self;
        }
        let (big, small) = if self.expo >= other.expo { (self, other) } else { (other, self) };
        let shift = (small.expo - big.expo).exp();
        Self { mant: big.mant + small.mant * shift, expo: big.expo }.normalized()
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&-*other)
    }

    pub fn scale(&self, z: Complex<T>) -> Self {
        Self { mant: self.mant * z, expo: self.expo }.normalized()
    }
}

impl<T: Float> Add for Scaled<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Scaled::add(&self, &rhs)
    }
}

impl<T: Float> Sub for Scaled<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Scaled::sub(&self, &rhs)
    }
}

impl<T: Float> Mul for Scaled<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self { mant: self.mant * rhs.mant, expo: self.expo + rhs.expo }.normalized()
    }
}

impl<T: Float> Mul<Complex<T>> for Scaled<T> {
    type Output = Self;
    fn mul(self, rhs: Complex<T>) -> Self {
        self.scale(rhs)
    }
}

impl<T: Float> Div for Scaled<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        Self { mant: self.mant / rhs.mant, expo: self.expo - rhs.expo }.normalized()
    }
}

impl<T: Float> Neg for Scaled<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { mant: -self.mant, expo: self.expo }
    }
}
