//! Far-field exponents of the radial adjoint spectral equation
//! `u'' + (d-1)/r u' + 2r u' - (lambda - 2d) u = -conj(V) u` for `Re lambda < d`.
//!
//! With `u = r^{-(d-1)/2} e^{-r^2/2} v` it becomes
//! `v'' = (r^2 + lambda - d + (d-1)(d-3)/(4 r^2) - conj(V)) v`, which is
//! integrated in the gauges `v = e^{s r^2/2} r^kappa h`:
//! `s = +1, kappa = (lambda-d-1)/2` for the dominant solution `u_1 ~ r^{Re lambda/2 - d}`
//! and `s = -1, kappa = -(lambda-d+1)/2` for the recessive `u_0 ~ e^{-r^2} r^{-Re lambda/2}`.
//! Either way the remaining perturbation is `(c - kappa^2 + kappa)/r^2 - conj(V)`.

use crate::fundsys::{
    direct_integrate_gauge, LeadingOrder, OdeDirection, OdeOptions, RadialGrid, RadialPotential, Seed,
};
use crate::{Cplx, Real, ScaledC};

use super::{check_dimension, SemigroupError};

struct Gauge {
    s: Real,
    kappa: Cplx,
    /// `(d-1)(d-3)/4`.
    c: Real,
    v: RadialPotential,
}

impl LeadingOrder for Gauge {
    fn value(&self, r: Real) -> ScaledC {
        ScaledC::exp(self.kappa * r.ln() + 0.5 * self.s * r * r)
    }

    fn log_derivative(&self, r: Real) -> Cplx {
        self.kappa / r + self.s * r
    }

    fn perturbation(&self, r: Real) -> Cplx {
        (self.c - self.kappa * self.kappa + self.kappa) / (r * r) - self.v.eval(r).conj()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppendixBOptions {
    /// The fit uses grid points in `[far_fraction r_max, r_max]`.
    pub far_fraction: Real,
    /// Largest admissible root-mean-square residual of either linear fit.
    pub fit_threshold: Real,
    pub ode: OdeOptions,
}

impl Default for AppendixBOptions {
    fn default() -> Self {
        Self { far_fraction: 0.25, fit_threshold: 1e-2, ode: OdeOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppendixBSlopes {
    /// Fitted exponent of `|u_0| e^{r^2}`; expected `-Re lambda / 2`.
    pub slope0: Real,
    /// Fitted exponent of `|u_1|`; expected `Re lambda / 2 - d`.
    pub slope1: Real,
    pub residual0: Real,
    pub residual1: Real,
    /// `int |u_1|^2 r^{d-1} dr` over the fit window, plus the power-law tail
    /// beyond it implied by `slope1` (infinite if that tail diverges).
    pub l2_far: Real,
}

impl AppendixBSlopes {
    pub fn expected(d: u32, lambda: Cplx) -> (Real, Real) {
        (-0.5 * lambda.re, 0.5 * lambda.re - d as Real)
    }
}

/// Least-squares line through `(x, y)`: slope and RMS residual.
fn fit_line(x: &[Real], y: &[Real]) -> (Real, Real) {
    let n = x.len() as Real;
    let (mx, my) = (x.iter().sum::<Real>() / n, y.iter().sum::<Real>() / n);
    let sxy: Real = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: Real = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let rss: Real = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    (slope, (rss / n).sqrt())
}

/// Integrate the smooth-at-zero solution outwards from `grid.r_min` (it is
/// dominated by `u_1` far out) and the recessive solution inwards from
/// `grid.r_max`, then fit log-log slopes on the far part of `grid`.
pub fn appendix_b_slopes(
    d: u32,
    lambda: Cplx,
    v: &RadialPotential,
    grid: &RadialGrid,
    opts: &AppendixBOptions,
) -> Result<AppendixBSlopes, SemigroupError> {
    check_dimension(d)?;
    if lambda.re >= d as Real {
        return Err(SemigroupError::SpectralOutOfRange { re_lambda: lambda.re, d });
    }
    let dd = d as Real;
    let c = (dd - 1.0) * (dd - 3.0) / 4.0;
    let k = 0.5 * (dd - 1.0);
    let far: Vec<Real> = grid.points_in(opts.far_fraction * grid.r_max, grid.r_max);
    if far.len() < 3 {
        return Err(SemigroupError::FitQualityLow { residual: Real::INFINITY, threshold: opts.fit_threshold });
    }
    let log_r: Vec<Real> = far.iter().map(|r| r.ln()).collect();

    // Power series at zero: u = 1 + a r^2, with 2 d a = lambda - 2d - conj(V(0)).
    let r0 = grid.r_min;
    let a = (lambda - 2.0 * dd - v.eval(0.0).conj()) / (2.0 * dd);
    let (u, du) = (1.0 + a * r0 * r0, 2.0 * a * r0);
    let lift = ScaledC::exp(Cplx::new(k * r0.ln() + 0.5 * r0 * r0, 0.0));
    let seed = Seed {
        r0,
        value: lift * u,
        derivative: lift * (u * (k / r0 + r0) + du),
    };
    let dominant = Gauge { s: 1.0, kappa: 0.5 * (lambda - dd - 1.0), c, v: *v };
    let sol1 = direct_integrate_gauge(&dominant, |r| dominant.perturbation(r), seed, OdeDirection::Outward, &far, &opts.ode)?;
    // ln|u| = ln|v| - k ln r - r^2/2
    let ln_u1: Vec<Real> = sol1.r.iter().zip(&sol1.value).map(|(r, v)| v.ln_abs() - k * r.ln() - 0.5 * r * r).collect();
    let (slope1, residual1) = fit_line(&log_r, &ln_u1);

    let recessive = Gauge { s: -1.0, kappa: -0.5 * (lambda - dd + 1.0), c, v: *v };
    let rm = grid.r_max;
    let lead = recessive.value(rm);
    let seed0 = Seed { r0: rm, value: lead, derivative: lead * recessive.log_derivative(rm) };
    let sol0 = direct_integrate_gauge(&recessive, |r| recessive.perturbation(r), seed0, OdeDirection::Inward, &far, &opts.ode)?;
    // ln(|u_0| e^{r^2})
    let ln_u0: Vec<Real> = sol0.r.iter().zip(&sol0.value).map(|(r, v)| v.ln_abs() - k * r.ln() + 0.5 * r * r).collect();
    let (slope0, residual0) = fit_line(&log_r, &ln_u0);

    let worst = residual0.max(residual1);
    if !(worst <= opts.fit_threshold) {
        return Err(SemigroupError::FitQualityLow { residual: worst, threshold: opts.fit_threshold });
    }

    // trapezoid over the window, then int_R^inf C^2 r^{2 slope + d - 1} dr
    let dens: Vec<Real> = sol1.r.iter().zip(&ln_u1).map(|(r, l)| (2.0 * l).exp() * r.powf(dd - 1.0)).collect();
    let window: Real = sol1.r.windows(2).zip(dens.windows(2)).map(|(r, f)| 0.5 * (r[1] - r[0]) * (f[0] + f[1])).sum();
    let p = 2.0 * slope1 + dd;
    let tail = if p < 0.0 { dens.last().unwrap() * grid.r_max / (-p) } else { Real::INFINITY };
    Ok(AppendixBSlopes { slope0, slope1, residual0, residual1, l2_far: window + tail })
}
