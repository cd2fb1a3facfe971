use num_complex::Complex;
use num_traits::Float;

use super::MathError;

/// Principal square root by the explicit two-term formula
/// `sqrt(z) = sqrt((|z| + Re z)/2) + i sgn(Im z) sqrt((|z| - Re z)/2)`.
///
/// Points on the cut `(-inf, 0]` are rejected.
pub fn principal_sqrt<T: Float>(z: Complex<T>) -> Result<Complex<T>, MathError> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(MathError::NonFinite("principal_sqrt argument"));
    }
    if z.im == T::zero() && z.re <= T::zero() {
        return Err(MathError::BranchCutViolation {
            re: z.re.to_f64().unwrap_or(f64::NAN),
            im: 0.0,
        });
    }
    Ok(sqrt_off_cut(z))
}

/// Same formula without the cut check; the caller guarantees `z` is off the cut.
///
/// The smaller component is recovered from `Im z / (2 * larger)` so that
/// neither branch suffers cancellation.
#[inline]
pub fn sqrt_off_cut<T: Float>(z: Complex<T>) -> Complex<T> {
    let two = T::one() + T::one();
    let m = z.norm();
    if m == T::zero() {
        return Complex::new(T::zero(), T::zero());
    }
    if z.re >= T::zero() {
        let a = ((m + z.re) / two).sqrt();
        Complex::new(a, z.im / (two * a))
    } else {
        let b = ((m - z.re) / two).sqrt();
        let s = if z.im < T::zero() { -T::one() } else { T::one() };
        Complex::new(z.im.abs() / (two * b), s * b)
    }
}
