//! The free Ornstein-Uhlenbeck semigroup `S0(t) = e^{t L0}`,
//! `L0 = Delta - 2 x . grad`, its Fourier-side resolvent at `lambda = 2d`, and
//! the far-field exponents of the adjoint spectral equation.
//!
//! `S0(t) f(x) = (pi a)^{-d/2} int e^{-|y|^2/a} f(e^{-2t} x - y) dy` with
//! `a = 1 - e^{-4t}`. On the channel `g(|x|) Y_{l,m}(x/|x|)` this is the
//! radial integral operator with kernel
//!
//! `K_l(r, rho) = (pi a)^{-d/2} (2 pi)^{d/2} beta^{1-d/2} I_{l+d/2-1}(beta)
//!                e^{-(e^{-4t} r^2 + rho^2)/a} rho^{d-1}`,
//!
//! `beta = 2 e^{-2t} r rho / a`, obtained from the plane-wave expansion of
//! `e^{beta w . eta}` on the sphere.

mod appendix;
mod fourier;

use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

use crate::angular::{embed, project, AngularError, AngularIndex, GridFunction3D, RadialFunction};
use crate::complexmath::{gauss_legendre_reference, half_integer_bessel_scaled, BesselKind, MathError};
use crate::fundsys::{FundsysError, PanelSet, RadialGrid, RadialPotential, SolverOptions};
use crate::phase::SpectralPoint;
use crate::resolvent::{build_green_kernel, ResolventError, ResolventOperator};
use crate::{Cplx, Real, ScaledC};

pub use appendix::{appendix_b_slopes, AppendixBOptions, AppendixBSlopes};
pub use fourier::{
    fourier_kernel, fourier_kernel_ratio_sup, fourier_panels, fourier_residual, free_resolvent_fourier,
    free_resolvent_fourier_grid, inverse_radial_fourier, FourierResolvent,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemigroupError {
    #[error("t must be positive and finite, got {0}")]
    InvalidTime(Real),
    #[error("dimension d = {0} is not supported: need odd d >= 3")]
    UnsupportedDimension(u32),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("horizon T = {horizon} leaves a truncation estimate {estimate:e} above {tol:e}")]
    HorizonTooShort { horizon: Real, estimate: Real, tol: Real },
    #[error("Re lambda = {re_lambda} must be below d = {d}")]
    SpectralOutOfRange { re_lambda: Real, d: u32 },
    #[error("regression residual {residual:e} exceeds {threshold:e}")]
    FitQualityLow { residual: Real, threshold: Real },
    #[error(transparent)]
    Math(#[from] MathError),
    #[error(transparent)]
    Fundsys(#[from] FundsysError),
    #[error(transparent)]
    Resolvent(#[from] ResolventError),
    #[error(transparent)]
    Angular(#[from] AngularError),
}

fn check_dimension(d: u32) -> Result<(), SemigroupError> {
    if d < 3 || d.is_multiple_of(2) {
        return Err(SemigroupError::UnsupportedDimension(d));
    }
    Ok(())
}

/// Time parameters of the Mehler kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OUKernelParams {
    pub t: Real,
    /// `1 - e^{-4t}`, in `(0, 1)`.
    pub alpha_t: Real,
    pub d: u32,
}

impl OUKernelParams {
    pub fn new(t: Real, d: u32) -> Result<Self, SemigroupError> {
        check_dimension(d)?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(SemigroupError::InvalidTime(t));
        }
        Ok(Self { t, alpha_t: -(-4.0 * t).exp_m1(), d })
    }

    /// `e^{-2t}`, the dilation factor.
    pub fn contraction(&self) -> Real {
        (-2.0 * self.t).exp()
    }
}

/// `K_l(r, rho)` of the channel operator.
pub fn channel_kernel(p: &OUKernelParams, ell: u32, r: Real, rho: Real) -> Result<Real, SemigroupError> {
    let (a, e2) = (p.alpha_t, p.contraction());
    let half_d = 0.5 * p.d as Real;
    let order = ell as Real + half_d - 1.0;
    let beta = 2.0 * e2 * r * rho / a;
    // (pi a)^{-d/2} (2 pi)^{d/2} = (2 / a)^{d/2}
    let log_pref = half_d * (2.0 / a).ln() + (p.d as Real - 1.0) * rho.ln();
    if beta == 0.0 {
        if ell > 0 {
            return Ok(0.0);
        }
        // beta^{1-d/2} I_{d/2-1}(beta) -> 2^{1-d/2} / Gamma(d/2)
        let gamma = (1..(p.d - 1) / 2).fold(PI.sqrt() / 2.0, |g, j| g * (j as Real + 0.5));
        let v = (log_pref - (e2 * e2 * r * r + rho * rho) / a).exp();
        return Ok(v * 2f64.powf(1.0 - half_d) / gamma);
    }
    // I_nu(beta) = e^{-i pi nu / 2} J_nu(i beta)
    let j = half_integer_bessel_scaled(BesselKind::J, order, Cplx::new(0.0, beta))?;
    let rot = Cplx::from_polar(1.0, -0.5 * PI * order);
    let expo = log_pref + (1.0 - half_d) * beta.ln() - (e2 * e2 * r * r + rho * rho) / a;
    Ok((j * rot * ScaledC::exp(Cplx::new(expo, 0.0))).to_complex().re)
}

/// Chunks wider than this many `sqrt(alpha)` are subdivided.
const CHUNK_WIDTHS: Real = 4.0;
/// The Gaussian factor is below `e^{-81}` outside `9 sqrt(alpha)`.
const WINDOW_WIDTHS: Real = 9.0;

/// `[S0(t) (g Y_l)](r) / Y_l` at each target radius, by Gauss quadrature in
/// `rho` over a window around `e^{-2t} r` of `9 alpha^{1/2}` on each side,
/// split at the panel edges of `g`.
pub fn ou_apply_channel_at(
    p: &OUKernelParams,
    ell: u32,
    g: &RadialFunction,
    targets: &[Real],
) -> Result<Vec<Cplx>, SemigroupError> {
    let (gx, gw) = gauss_legendre_reference::<Real>(16);
    let sa = p.alpha_t.sqrt();
    let (lo, hi) = (g.panels.lo(), g.panels.hi());
    let mut out = Vec::with_capacity(targets.len());
    for &r in targets {
        let c = p.contraction() * r;
        let (a, b) = ((c - WINDOW_WIDTHS * sa).max(lo), (c + WINDOW_WIDTHS * sa).min(hi));
        let mut acc = Cplx::new(0.0, 0.0);
        if b > a {
            let mut cuts = vec![a];
            cuts.extend(g.panels.edges.iter().copied().filter(|&e| e > a && e < b));
            cuts.push(b);
            for seg in cuts.windows(2) {
                let n = ((seg[1] - seg[0]) / (CHUNK_WIDTHS * sa)).ceil().max(1.0) as usize;
                let h = (seg[1] - seg[0]) / n as Real;
                for k in 0..n {
                    let x0 = seg[0] + k as Real * h;
                    for (x, w) in gx.iter().zip(&gw) {
                        let rho = x0 + 0.5 * h * (x + 1.0);
                        acc += g.eval(rho) * (0.5 * h * w * channel_kernel(p, ell, r, rho)?);
                    }
                }
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// [`ou_apply_channel_at`] on the nodes of `out`.
pub fn ou_apply_channel(
    p: &OUKernelParams,
    ell: u32,
    g: &RadialFunction,
    out: &PanelSet,
) -> Result<RadialFunction, SemigroupError> {
    let values = ou_apply_channel_at(p, ell, g, &out.nodes)?;
    Ok(RadialFunction { panels: out.clone(), values })
}

/// `S0(t) f` for radial `f`, returned on the nodes of `f`.
pub fn ou_apply(p: &OUKernelParams, f: &RadialFunction) -> Result<RadialFunction, SemigroupError> {
    ou_apply_channel(p, 0, f, &f.panels)
}

/// `S0(t) f` for `d = 3` grid data, channel by channel up to the sphere's `ell_max`.
pub fn ou_apply_grid(p: &OUKernelParams, f: &GridFunction3D) -> Result<GridFunction3D, SemigroupError> {
    if p.d != 3 {
        return Err(SemigroupError::UnsupportedDimension(p.d));
    }
    let mut out = GridFunction3D::zeros(f.radial.clone(), f.sphere.clone());
    for idx in AngularIndex::all_up_to(f.sphere.ell_max) {
        let g = project(f, idx)?;
        let sg = ou_apply_channel(p, idx.ell(), &g, &f.radial)?;
        out.add_assign(&embed(&sg, idx, &f.sphere)?);
    }
    Ok(out)
}

/// `S0(t) f` at arbitrary points by direct product quadrature of the
/// three-dimensional Gaussian convolution; the oracle for the channel path.
pub fn ou_apply_direct(p: &OUKernelParams, f: &GridFunction3D, targets: &[[Real; 3]]) -> Vec<Cplx> {
    let e2 = p.contraction();
    let a = p.alpha_t;
    let ns = f.sphere.len();
    let dirs: Vec<[Real; 3]> = (0..ns).map(|j| f.sphere.direction(j)).collect();
    let norm = (PI * a).powf(-1.5);
    targets
        .iter()
        .map(|x| {
            let c = [e2 * x[0], e2 * x[1], e2 * x[2]];
            let mut acc = Cplx::new(0.0, 0.0);
            for (i, (&r, &wr)) in f.radial.nodes.iter().zip(&f.radial.weights).enumerate() {
                for (j, w) in dirs.iter().enumerate() {
                    let d2 = (c[0] - r * w[0]).powi(2) + (c[1] - r * w[1]).powi(2) + (c[2] - r * w[2]).powi(2);
                    acc += f.values[i * ns + j] * (wr * r * r * f.sphere.weights[j] * (-d2 / a).exp());
                }
            }
            acc * norm
        })
        .collect()
}

/// Output panels for `S0(t) g`, which lives on `[0, e^{2t}(hi + 9)]`.
pub fn spread_panels(p: &OUKernelParams, g: &RadialFunction) -> PanelSet {
    let hi = (g.panels.hi() + WINDOW_WIDTHS * p.alpha_t.sqrt()) / p.contraction();
    let width = 0.5 * p.alpha_t.sqrt().max(g.panels.half_width(0)) / p.contraction();
    let n = (hi / width).ceil().max(1.0) as usize;
    PanelSet::from_edges((0..=n).map(|k| hi * k as Real / n as Real).collect())
}

/// Settings of the Laplace-transform cross-check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceOptions {
    /// Admissible truncation estimate `e^{-(Re lambda - d) T} / (Re lambda - d)`.
    pub tol: Real,
    /// Report `HorizonTooShort` when the estimate exceeds `tol`.
    pub enforce_horizon: bool,
    /// Time panels have width at most `min(max_step, phase_step / omega)`.
    pub max_step: Real,
    pub phase_step: Real,
    pub nodes_per_step: usize,
}

impl Default for LaplaceOptions {
    fn default() -> Self {
        Self { tol: 1e-4, enforce_horizon: true, max_step: 0.05, phase_step: 2.0, nodes_per_step: 10 }
    }
}

/// Outcome of [`laplace_crosscheck`].
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceCheck {
    /// `||u_laplace - u_resolvent|| / ||u_resolvent||` on the nodes of `f`.
    pub discrepancy: Real,
    pub truncation_estimate: Real,
    pub time_nodes: usize,
}

/// Horizon at which the truncation estimate meets `tol`.
pub fn laplace_horizon(p: &SpectralPoint, tol: Real) -> Real {
    let gap = p.lambda.re - p.d as Real;
    (1.0 / (gap * tol)).ln().max(0.0) / gap
}

/// Compare `int_0^T e^{-lambda t} S0(t) f dt` with the reduced resolvent at
/// `V = 0` on the angular channel of `p`. Both sides are evaluated on the
/// nodes of `f`.
pub fn laplace_crosscheck(
    p: &SpectralPoint,
    f: &RadialFunction,
    horizon: Real,
    opts: &LaplaceOptions,
) -> Result<LaplaceCheck, SemigroupError> {
    check_dimension(p.d)?;
    let gap = p.lambda.re - p.d as Real;
    let truncation_estimate = (-gap * horizon).exp() / gap;
    if opts.enforce_horizon && truncation_estimate > opts.tol {
        return Err(SemigroupError::HorizonTooShort { horizon, estimate: truncation_estimate, tol: opts.tol });
    }
    let solver = SolverOptions::default();
    let grid = RadialGrid::for_point(p, solver.c, solver.r_min, solver.r_max, 40, 40)?;
    let kernel = build_green_kernel(p, &RadialPotential::zero(), &grid, &solver, None)?;
    let op = ResolventOperator::new(kernel);
    let sol = op.solve(|r| f.eval(r));
    let targets = &f.panels.nodes;
    let resolvent: Vec<Cplx> = targets.iter().map(|&r| sol.eval(r)).collect();

    let step = opts.max_step.min(opts.phase_step / p.omega.max(1e-300));
    let panels = (horizon / step).ceil().max(1.0) as usize;
    let h = horizon / panels as Real;
    let (tx, tw) = gauss_legendre_reference::<Real>(opts.nodes_per_step);
    let times: Vec<(Real, Real)> = (0..panels)
        .flat_map(|k| tx.iter().zip(&tw).map(move |(x, w)| (h * (k as Real + 0.5 * (x + 1.0)), 0.5 * h * w)))
        .collect();
    let slices: Vec<Result<Vec<Cplx>, SemigroupError>> = times
        .par_iter()
        .map(|&(t, w)| {
            let kp = OUKernelParams::new(t, p.d)?;
            let weight = (-p.lambda * t).exp() * w;
            Ok(ou_apply_channel_at(&kp, p.ell, f, targets)?.into_iter().map(|v| v * weight).collect())
        })
        .collect();
    let mut laplace = vec![Cplx::new(0.0, 0.0); targets.len()];
    for s in slices {
        laplace.iter_mut().zip(s?).for_each(|(a, b)| *a += b);
    }
    let wnorm = |v: &dyn Fn(usize) -> Cplx| -> Real {
        (0..targets.len())
            .map(|i| f.panels.weights[i] * targets[i].powi(p.d as i32 - 1) * v(i).norm_sqr())
            .sum::<Real>()
            .sqrt()
    };
    let den = wnorm(&|i| resolvent[i]);
    let num = wnorm(&|i| laplace[i] - resolvent[i]);
    let discrepancy = if den == 0.0 { num } else { num / den };
    Ok(LaplaceCheck { discrepancy, truncation_estimate, time_nodes: times.len() })
}

#[cfg(test)]
mod tests;
