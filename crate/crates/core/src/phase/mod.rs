//! Liouville-Green phases and correction potentials.
//!
//! With `p(s) = sqrt(mu + s^2 + nu^2/s^2)`, the phase is
//! `mu xi(mu^{-1/2} r) = int_1^r p(s) ds`, and the remainder `phi` is what is
//! left after removing `r^2/2` and the logarithmic weight.

use thiserror::Error;

use crate::complexmath::{adaptive_quad, principal_sqrt, sqrt_off_cut, MathError};
use crate::{Cplx, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhaseError {
    #[error("dimension d = {0} is unsupported (odd d >= 3 required)")]
    UnsupportedDimension(u32),
    #[error("damping b = {0} is unsupported (b > 0 required)")]
    UnsupportedDamping(Real),
    #[error("frequency omega = {0} must be positive")]
    NonPositiveFrequency(Real),
    #[error("alpha = mu^(1/2)/nu needs nu >= 1, got nu = {0}")]
    AlphaUndefined(Real),
    #[error(transparent)]
    Math(#[from] MathError),
}

/// Parameters of one resolvent evaluation at `lambda = d + mu`, `mu = b + i omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub d: u32,
    pub ell: u32,
    pub nu: Real,
    pub b: Real,
    pub omega: Real,
    pub mu: Cplx,
    pub lambda: Cplx,
    /// `mu^{1/2}/nu`, present when `nu >= 1`.
    pub alpha: Option<Cplx>,
    /// Real-`mu` calibration mode; never used by production paths.
    pub test_mode: bool,
}

impl SpectralPoint {
    pub fn new(d: u32, ell: u32, b: Real, omega: Real) -> Result<Self, PhaseError> {
        if d < 3 || d.is_multiple_of(2) {
            return Err(PhaseError::UnsupportedDimension(d));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(PhaseError::UnsupportedDamping(b));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(PhaseError::NonPositiveFrequency(omega));
        }
        let nu = d as Real / 2.0 + ell as Real - 1.0;
        let mu = Cplx::new(b, omega);
        let sqrt_mu = principal_sqrt(mu)?;
        Ok(Self {
            d,
            ell,
            nu,
            b,
            omega,
            mu,
            lambda: mu + d as Real,
            alpha: (nu >= 1.0).then(|| sqrt_mu / nu),
            test_mode: false,
        })
    }

    /// Real positive `mu` with arbitrary `nu >= 0`, for closed-form oracles.
    pub fn real_test(nu: Real, mu: Real) -> Self {
        assert!(mu > 0.0 && nu >= 0.0);
        let m = Cplx::new(mu, 0.0);
        Self {
            d: 3,
            ell: 0,
            nu,
            b: mu,
            omega: 0.0,
            mu: m,
            lambda: m + 3.0,
            alpha: (nu >= 1.0).then(|| Cplx::new(mu.sqrt() / nu, 0.0)),
            test_mode: true,
        }
    }

    pub fn sqrt_mu(&self) -> Cplx {
        sqrt_off_cut(self.mu)
    }

    pub fn alpha(&self) -> Result<Cplx, PhaseError> {
        self.alpha.ok_or(PhaseError::AlphaUndefined(self.nu))
    }

    /// `p(r) = sqrt(mu + r^2 + nu^2/r^2)`.
    pub fn lg_momentum(&self, r: Real) -> Cplx {
        sqrt_off_cut(self.mu + r * r + self.nu * self.nu / (r * r))
    }
}

/// Phase data at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseValue {
    pub r: Real,
    /// `xi(mu^{-1/2} r)`.
    pub xi: Cplx,
    /// `xi'(mu^{-1/2} r)`.
    pub xi_prime: Cplx,
    pub phi: Real,
    /// `(b/2) log <mu^{-1/2} r>`.
    pub log_weight: Real,
}

impl PhaseValue {
    fn assemble(p: &SpectralPoint, r: Real, mu_xi: Cplx) -> Self {
        let log_weight = 0.25 * p.b * (r * r / p.mu.norm()).ln_1p();
        Self {
            r,
            xi: mu_xi / p.mu,
            xi_prime: p.lg_momentum(r) / p.sqrt_mu(),
            phi: mu_xi.re - 0.5 * r * r - log_weight,
            log_weight,
        }
    }

    /// `mu xi`, the phase that multiplies the exponent.
    pub fn mu_xi(&self, p: &SpectralPoint) -> Cplx {
        self.xi * p.mu
    }
}

// p(s) - s without cancellation.
fn excess(p: &SpectralPoint, s: Real) -> Cplx {
    (p.mu + p.nu * p.nu / (s * s)) / (p.lg_momentum(s) + s)
}

fn excess_integral(p: &SpectralPoint, a: Real, b: Real, tol: Real) -> Result<Cplx, MathError> {
    Ok(adaptive_quad(|s| excess(p, s), a, b, tol)?.value)
}

/// `xi(mu^{-1/2} r)` with its derivative and the remainder `phi`.
pub fn xi_phase(p: &SpectralPoint, r: Real, tol: Real) -> Result<PhaseValue, PhaseError> {
    assert!(r > 0.0, "xi_phase needs r > 0");
    let mu_xi = Cplx::new(0.5 * (r * r - 1.0), 0.0) + excess_integral(p, 1.0, r, tol)?;
    Ok(PhaseValue::assemble(p, r, mu_xi))
}

/// [`xi_phase`] on many radii by cumulative integration between neighbours.
pub fn xi_profile(p: &SpectralPoint, rs: &[Real], tol: Real) -> Result<Vec<PhaseValue>, PhaseError> {
    let mut order: Vec<usize> = (0..rs.len()).collect();
    order.sort_by(|&i, &j| rs[i].total_cmp(&rs[j]));
    let mut out = vec![None; rs.len()];
    let split = order.partition_point(|&i| rs[i] < 1.0);
    let mut acc = Cplx::new(0.0, 0.0);
    let mut prev = 1.0;
    for &i in &order[split..] {
        acc += excess_integral(p, prev, rs[i], tol)?;
        prev = rs[i];
        out[i] = Some(acc);
    }
    acc = Cplx::new(0.0, 0.0);
    prev = 1.0;
    for &i in order[..split].iter().rev() {
        assert!(rs[i] > 0.0, "xi_profile needs r > 0");
        acc += excess_integral(p, prev, rs[i], tol)?;
        prev = rs[i];
        out[i] = Some(acc);
    }
    Ok(rs
        .iter()
        .zip(out)
        .map(|(&r, e)| PhaseValue::assemble(p, r, Cplx::new(0.5 * (r * r - 1.0), 0.0) + e.unwrap()))
        .collect())
}

/// `mu^{-1} Q(mu^{-1/2} r)` with `Q = (4 g g'' - 5 g'^2)/(16 g^2)`,
/// `g(y) = 1 + y^2 + a^2/y^2`, `a = nu/mu`.
#[allow(non_snake_case)]
pub fn lg_potential_Q(p: &SpectralPoint, r: Real) -> Cplx {
    let y = Cplx::new(r, 0.0) / p.sqrt_mu();
    let a2 = (p.nu / p.mu).powi(2);
    let y2 = y * y;
    let g = 1.0 + y2 + a2 / y2;
    let g1 = 2.0 * y - 2.0 * a2 / (y2 * y);
    let g2 = 2.0 + 6.0 * a2 / (y2 * y2);
    (4.0 * g * g2 - 5.0 * g1 * g1) / (16.0 * g * g) / p.mu
}

/// `(zeta(alpha r), zeta'(alpha r))` normalised by `zeta(alpha) = 0`.
pub fn zeta_phase(p: &SpectralPoint, r: Real) -> Result<(Cplx, Cplx), PhaseError> {
    assert!(r > 0.0, "zeta_phase needs r > 0");
    let alpha = p.alpha()?;
    let raw = |x: Cplx| -> Result<Cplx, MathError> {
        let root = principal_sqrt(1.0 + x * x)?;
        let ratio = x / (1.0 + root);
        if ratio.im == 0.0 && ratio.re <= 0.0 {
            return Err(MathError::BranchCutViolation { re: ratio.re, im: 0.0 });
        }
        Ok(root + ratio.ln())
    };
    let x = alpha * r;
    let zeta = raw(x)? - raw(alpha)?;
    let zeta_prime = principal_sqrt(1.0 + (x * x).inv())?;
    Ok((zeta, zeta_prime))
}

/// `alpha^2 q~(alpha r) = alpha^2 (4 - alpha^2 r^2) / (4 (1 + alpha^2 r^2)^2)`.
pub fn bessel_potential_qtilde(p: &SpectralPoint, r: Real) -> Result<Cplx, PhaseError> {
    assert!(r >= 0.0, "bessel_potential_qtilde needs r >= 0");
    let a2 = p.alpha()?.powi(2);
    let x2 = a2 * r * r;
    Ok(a2 * (4.0 - x2) / (4.0 * (1.0 + x2).powi(2)))
}

/// `|mu^{-1} Q(mu^{-1/2} r)| r^2`.
pub fn estq_ratio(p: &SpectralPoint, r: Real) -> Real {
    lg_potential_Q(p, r).norm() * r * r
}

/// `|alpha^2 q~(alpha r)| <alpha r>^2 / |alpha|^2`.
pub fn tildeq_ratio(p: &SpectralPoint, r: Real) -> Result<Real, PhaseError> {
    let alpha = p.alpha()?;
    let q = bessel_potential_qtilde(p, r)?;
    Ok(q.norm() * (1.0 + (alpha * r).norm_sqr()) / alpha.norm_sqr())
}

/// Smallest forward difference of a sequence; `+inf` when shorter than two.
pub fn min_increment(values: &[Real]) -> Real {
    values.windows(2).map(|w| w[1] - w[0]).fold(Real::INFINITY, Real::min)
}

/// `n` log-spaced points on `[a, b]`.
pub fn log_grid(a: Real, b: Real, n: usize) -> Vec<Real> {
    assert!(a > 0.0 && b > a && n >= 2);
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * i as Real / (n - 1) as Real).exp()).collect()
}

#[cfg(test)]
mod tests;
