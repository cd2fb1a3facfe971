//! Fundamental systems of `v'' = q v`, `q = r^2 + (nu^2 - 1/4)/r^2 + mu - V`,
//! regime by regime, together with an independent ODE integrator, Wronskians
//! and connection coefficients.

mod grid;
mod leading;
mod ode;
mod potential;
mod regimes;
mod volterra;

use std::sync::Arc;

use thiserror::Error;

use crate::complexmath::MathError;
use crate::phase::{PhaseError, SpectralPoint};
use crate::{Cplx, Real, ScaledC};

pub use grid::{reference_panel, resolution_scale, PanelSet, RadialGrid, PANEL_NODES};
pub use leading::{
    normal_form_q, BesselLead, LargeNuLead, LeadingOrder, PhaseTable, WeberLead, W_HPLUS_HMINUS,
    W_J_HPLUS, W_J_Y,
};
pub use ode::{direct_integrate, direct_integrate_gauge, OdeDirection, OdeOptions, Seed};
pub use potential::{PotentialKind, RadialPotential};
pub use regimes::{
    admissible_c, hankel_condition, bessel_small_solution, hankel_solution, large_nu_solution, weber_solution,
    RegimeSolution, Sweep,
};
pub use volterra::{
    separable_volterra, volterra_solve, DenseVolterra, Direction, VolterraOptions, VolterraSolution,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FundsysError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("Picard iterates grew to {sup} beyond the bound {bound}")]
    DivergenceDetected { sup: Real, bound: Real },
    #[error("kernel integral m0 = {m0} exceeds the cap {cap}")]
    KernelNotIntegrable { m0: Real, cap: Real },
    #[error("Picard iteration stalled after {iterations} steps (last change {change:e})")]
    VolterraNoConvergence { iterations: usize, change: Real },
    #[error("Wronskian {wronskian:e} is below the degeneracy tolerance")]
    DegenerateBasis { wronskian: Real },
    #[error("ODE step size underflow at r = {r}")]
    StepSizeUnderflow { r: Real },
    #[error(transparent)]
    Phase(#[from] PhaseError),
    #[error(transparent)]
    Math(#[from] MathError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Weber,
    Hankel,
    BesselSmall,
    BesselLargeNu,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Weber => "Weber",
            Self::Hankel => "Hankel",
            Self::BesselSmall => "Bessel",
            Self::BesselLargeNu => "BesselLargeNu",
        }
    }
}

/// Default truncation radius `max(8, 4 sqrt(ln(1/tol)))` for `tol = 1e-6`.
pub fn default_r_max(tol: Real) -> Real {
    (4.0 * (1.0 / tol).ln().sqrt()).max(8.0)
}

/// Discretisation and threshold settings shared by all regimes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Panels have width at most `panel_kappa / resolution_scale(r)`.
    pub panel_kappa: Real,
    pub r_min: Real,
    pub r_max: Real,
    pub volterra: VolterraOptions,
    /// Initial Bessel/Hankel split constant, raised until admissible.
    pub c: Real,
    /// Small/large angular momentum split.
    pub nu0: Real,
    /// Frequency floor below which inputs are reported as out of range.
    pub omega0: Real,
    /// Hankel sums must stay above this modulus on `[c omega^{-1/2}, 1]`.
    pub hankel_floor: Real,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            panel_kappa: 2.5,
            r_min: 1e-4,
            r_max: default_r_max(1e-6),
            volterra: VolterraOptions::default(),
            c: 8.0,
            nu0: 20.0,
            omega0: 100.0,
            hankel_floor: 1e-3,
        }
    }
}

/// Samples of a solution and its derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub r: Vec<Real>,
    pub value: Vec<ScaledC>,
    pub deriv: Vec<ScaledC>,
}

/// Two homogeneous solutions of one regime sampled on a grid.
#[derive(Debug, Clone)]
pub struct FundamentalPair {
    pub regime: Regime,
    pub spectral: SpectralPoint,
    pub interval: (Real, Real),
    pub first: GridFunction,
    pub second: GridFunction,
    /// `|h - 1|` of the Volterra-corrected first solution.
    pub envelope: Vec<Real>,
    /// `W(first, second)`.
    pub wronskian: Cplx,
    pub solution: Arc<RegimeSolution>,
}

impl FundamentalPair {
    pub fn from_solution(p: &SpectralPoint, sol: RegimeSolution, grid: &RadialGrid) -> Self {
        let (lo, hi) = (sol.lo(), sol.hi());
        let rs = grid.points_in(lo, hi);
        let mut first = GridFunction { r: rs.clone(), value: vec![], deriv: vec![] };
        let mut second = first.clone();
        let mut envelope = Vec::with_capacity(rs.len());
        for &r in &rs {
            let (f, df) = sol.first(r);
            let (g, dg) = sol.second(r);
            first.value.push(f);
            first.deriv.push(df);
            second.value.push(g);
            second.deriv.push(dg);
            envelope.push((sol.h_at(r) - 1.0).norm());
        }
        Self {
            regime: sol.regime,
            spectral: *p,
            interval: (lo, hi),
            first,
            second,
            envelope,
            wronskian: sol.kappa,
            solution: Arc::new(sol),
        }
    }

    /// `f g' - f' g` at every sample.
    pub fn measured_wronskian(&self) -> Vec<Cplx> {
        (0..self.first.r.len())
            .map(|i| {
                (self.first.value[i] * self.second.deriv[i])
                    .sub(&(self.first.deriv[i] * self.second.value[i]))
                    .to_complex()
            })
            .collect()
    }

    /// Largest relative deviation of the sampled Wronskian from its nominal value.
    pub fn wronskian_drift(&self) -> Real {
        self.measured_wronskian()
            .iter()
            .map(|w| (w - self.wronskian).norm() / self.wronskian.norm())
            .fold(0.0, Real::max)
    }

    /// `sup envelope(r) * weight(r)` over the samples.
    pub fn weighted_envelope<F: Fn(Real) -> Real>(&self, weight: F) -> Real {
        self.first
            .r
            .iter()
            .zip(&self.envelope)
            .map(|(&r, e)| e * weight(r))
            .fold(0.0, Real::max)
    }

    /// Solutions at an arbitrary radius inside the regime.
    pub fn eval(&self, r: Real) -> [(ScaledC, ScaledC); 2] {
        [self.solution.first(r), self.solution.second(r)]
    }
}

/// `v_-, v_+` on `[1, r_max]`.
pub fn weber_system(
    p: &SpectralPoint,
    v: &RadialPotential,
    grid: &RadialGrid,
    opts: &SolverOptions,
) -> Result<FundamentalPair, FundsysError> {
    let opts = SolverOptions { r_max: grid.r_max, ..*opts };
    Ok(FundamentalPair::from_solution(p, weber_solution(p, v, &opts)?, grid))
}

/// `v_0, v_1` on `[r_min, c omega^{-1/2}]`.
pub fn bessel_small_system(
    p: &SpectralPoint,
    v: &RadialPotential,
    grid: &RadialGrid,
    c: Real,
    opts: &SolverOptions,
) -> Result<FundamentalPair, FundsysError> {
    let opts = SolverOptions { r_min: grid.r_min, ..*opts };
    let r_b = c / p.omega.sqrt();
    Ok(FundamentalPair::from_solution(p, bessel_small_solution(p, v, r_b, &opts)?, grid))
}

/// `v~_-, v~_+` on `[c omega^{-1/2}, 1]`.
pub fn hankel_system(
    p: &SpectralPoint,
    v: &RadialPotential,
    grid: &RadialGrid,
    c: Real,
    opts: &SolverOptions,
) -> Result<FundamentalPair, FundsysError> {
    let r_b = c / p.omega.sqrt();
    if r_b >= 1.0 {
        return Err(FundsysError::InvalidGrid(format!(
            "Hankel regime is empty: c omega^(-1/2) = {r_b} >= 1"
        )));
    }
    Ok(FundamentalPair::from_solution(p, hankel_solution(p, v, r_b, opts)?, grid))
}

/// `v^_0, v^_1` on `[r_min, 1]`.
pub fn bessel_large_nu_system(
    p: &SpectralPoint,
    v: &RadialPotential,
    grid: &RadialGrid,
    opts: &SolverOptions,
) -> Result<FundamentalPair, FundsysError> {
    let opts = SolverOptions { r_min: grid.r_min, ..*opts };
    Ok(FundamentalPair::from_solution(p, large_nu_solution(p, v, &opts)?, grid))
}

/// Wronskian of two `(value, derivative)` pairs.
pub fn wronskian(f: (ScaledC, ScaledC), g: (ScaledC, ScaledC)) -> ScaledC {
    (f.0 * g.1).sub(&(f.1 * g.0))
}

/// Coefficients expressing pair A in the basis of pair B at `r_eval`:
/// row `k` holds `(c1, c2)` with `A_k = c1 B_1 + c2 B_2`.
pub fn connection_coefficients(
    pair_a: [(ScaledC, ScaledC); 2],
    pair_b: [(ScaledC, ScaledC); 2],
    tol: Real,
) -> Result<[[ScaledC; 2]; 2], FundsysError> {
    let wb = wronskian(pair_b[0], pair_b[1]);
    let scale = (pair_b[0].0.abs() * pair_b[1].1.abs()).max(pair_b[0].1.abs() * pair_b[1].0.abs());
    if !(wb.abs() > tol * scale) {
        return Err(FundsysError::DegenerateBasis { wronskian: wb.abs() });
    }
    let coeff = |f| [wronskian(f, pair_b[1]) / wb, wronskian(pair_b[0], f) / wb];
    Ok([coeff(pair_a[0]), coeff(pair_a[1])])
}

/// [`connection_coefficients`] between two fundamental pairs at `r_eval`.
pub fn connect_pairs(
    pair_a: &FundamentalPair,
    pair_b: &FundamentalPair,
    r_eval: Real,
    tol: Real,
) -> Result<[[ScaledC; 2]; 2], FundsysError> {
    connection_coefficients(pair_a.eval(r_eval), pair_b.eval(r_eval), tol)
}
