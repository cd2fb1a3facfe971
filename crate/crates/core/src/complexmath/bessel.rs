//! Bessel and Hankel functions of half-integer order `n + 1/2`.
//!
//! Hankel functions use the terminating expansion
//! `H±(z) = sqrt(2/(pi z)) e^{±i(z - (n+1)pi/2)} sum_k (±i)^k a_k (2z)^{-k}`,
//! `a_k = (n+k)!/(k!(n-k)!)`. `J` comes from its power series for moderate
//! `|z|` and from `(H+ + H-)/2` otherwise; `Y = (H+ - H-)/(2i)`.

use num_complex::Complex;
use num_traits::Float;

use super::{sqrt_off_cut, MathError, Scaled};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BesselKind {
    J,
    Y,
    HPlus,
    HMinus,
}

fn c<T: Float>(x: f64) -> T {
    T::from(x).unwrap()
}

/// Integer `n` with `order = n + 1/2`.
pub fn half_integer_index<T: Float>(order: T) -> Result<usize, MathError> {
    let n = order - c(0.5);
    if !n.is_finite() || n < T::zero() || n.fract() != T::zero() {
        return Err(MathError::UnsupportedOrder(order.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(n.to_usize().unwrap())
}

fn check_argument<T: Float>(z: Complex<T>) -> Result<(), MathError> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(MathError::NonFinite("Bessel argument"));
    }
    if z.im == T::zero() && z.re <= T::zero() {
        return Err(MathError::BranchCutViolation {
            re: z.re.to_f64().unwrap_or(f64::NAN),
            im: 0.0,
        });
    }
    Ok(())
}

/// `sum_k (sign i)^k a_k (2z)^{-k}` for `k = 0..=n`; `sign` is `+1` or `-1`.
pub fn hankel_polynomial<T: Float>(sign: i8, n: usize, z: Complex<T>) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    let step = Complex::new(T::zero(), c::<T>(sign as f64)) / (z * c::<T>(2.0));
    let mut acc = one;
    let mut term = one;
    for k in 0..n {
        // a_{k+1}/a_k = (n+k+1)(n-k)/(k+1)
        let ratio = c::<T>(((n + k + 1) * (n - k)) as f64 / (k + 1) as f64);
        term = term * step * ratio;
        acc = acc + term;
    }
    acc
}

fn hankel_scaled<T: Float>(sign: i8, n: usize, z: Complex<T>) -> Scaled<T> {
    let s = c::<T>(sign as f64);
    let pi = c::<T>(std::f64::consts::PI);
    let pref = sqrt_off_cut(Complex::new(c::<T>(2.0), T::zero()) / (z * pi));
    let phase = s * (z.re - c::<T>((n + 1) as f64) * pi / c(2.0));
    let mant = pref * Complex::new(phase.cos(), phase.sin()) * hankel_polynomial(sign, n, z);
    Scaled { mant, expo: -s * z.im }.normalized()
}

fn series_threshold(n: usize) -> f64 {
    8.0 + n as f64
}

fn j_series_scaled<T: Float>(n: usize, z: Complex<T>) -> Scaled<T> {
    let nu = c::<T>(n as f64 + 0.5);
    let half_z = z / c::<T>(2.0);
    let w = -half_z * half_z;
    // 1/Gamma(nu + 1) with Gamma(m + 1/2) = sqrt(pi) prod_{j<m} (j + 1/2)
    let mut gamma = c::<T>(std::f64::consts::PI).sqrt();
    for j in 0..=n {
        gamma = gamma * c::<T>(j as f64 + 0.5);
    }
    let mut term = Complex::new(gamma.recip(), T::zero());
    let mut sum = term;
    let zabs = z.norm();
    let mut k = 0usize;
    loop {
        let kf = c::<T>(k as f64 + 1.0);
        term = term * w / (kf * (nu + kf));
        sum = sum + term;
        k += 1;
        if term.norm() <= T::epsilon() * sum.norm() * c(0.25) && kf > zabs {
            break;
        }
        if k > 2000 {
            break;
        }
    }
    Scaled::exp(half_z.ln() * nu) * sum
}

fn scaled_value<T: Float>(kind: BesselKind, n: usize, z: Complex<T>) -> Scaled<T> {
    match kind {
        BesselKind::HPlus => hankel_scaled(1, n, z),
        BesselKind::HMinus => hankel_scaled(-1, n, z),
        BesselKind::J => {
            if z.norm() < c(series_threshold(n)) {
                j_series_scaled(n, z)
            } else {
                let half = Complex::new(c::<T>(0.5), T::zero());
                hankel_scaled(1, n, z).add(&hankel_scaled(-1, n, z)) * half
            }
        }
        BesselKind::Y => {
            let f = Complex::new(T::zero(), c::<T>(-0.5));
            hankel_scaled(1, n, z).sub(&hankel_scaled(-1, n, z)) * f
        }
    }
}

/// Overflow-free value `Z_{n+1/2}(z)` as a mantissa/exponent pair.
pub fn half_integer_bessel_scaled<T: Float>(
    kind: BesselKind,
    order: T,
    z: Complex<T>,
) -> Result<Scaled<T>, MathError> {
    let n = half_integer_index(order)?;
    check_argument(z)?;
    Ok(scaled_value(kind, n, z))
}

/// Value and `z`-derivative, from `Z'_nu = (nu/z) Z_nu - Z_{nu+1}`.
pub fn half_integer_bessel_scaled_pair<T: Float>(
    kind: BesselKind,
    order: T,
    z: Complex<T>,
) -> Result<(Scaled<T>, Scaled<T>), MathError> {
    let n = half_integer_index(order)?;
    check_argument(z)?;
    let v = scaled_value(kind, n, z);
    let next = scaled_value(kind, n + 1, z);
    let d = (v * (Complex::new(order, T::zero()) / z)).sub(&next);
    Ok((v, d))
}

fn overflow_guard<T: Float>(z: Complex<T>) -> Result<(), MathError> {
    let limit = T::max_value().ln() - c(10.0);
    if z.im.abs() > limit {
        return Err(MathError::OverflowGuard(z.im.abs().to_f64().unwrap_or(f64::INFINITY)));
    }
    Ok(())
}

fn finite<T: Float>(z: Complex<T>) -> Result<Complex<T>, MathError> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(MathError::NonFinite("Bessel value"))
    }
}

/// `Z_{n+1/2}(z)` for `Z` in `{J, Y, H+, H-}`.
pub fn half_integer_bessel<T: Float>(
    kind: BesselKind,
    order: T,
    z: Complex<T>,
) -> Result<Complex<T>, MathError> {
    let n = half_integer_index(order)?;
    check_argument(z)?;
    overflow_guard(z)?;
    finite(scaled_value(kind, n, z).to_complex())
}

/// `d/dz Z_{n+1/2}(z)`.
pub fn half_integer_bessel_derivative<T: Float>(
    kind: BesselKind,
    order: T,
    z: Complex<T>,
) -> Result<Complex<T>, MathError> {
    overflow_guard(z)?;
    let (_, d) = half_integer_bessel_scaled_pair(kind, order, z)?;
    finite(d.to_complex())
}
