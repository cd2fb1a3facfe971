//! Green kernels of the reduced resolvent, their application to radial data,
//! kernel bound certificates, operator norm estimates and `(omega, ell)` scans.
//!
//! With `k = (d-1)/2` the reduced resolvent is `u = r^{-k} R~ (s^k f)` where
//! `R~` has kernel `G(r,s) = e^{(r^2-s^2)/2} v0(r_<) v_-(r_>) / W`,
//! `W = W(v_-, v0)`, `v0` recessive at zero and `v_-` recessive at infinity.

mod bounds;
mod operator;
mod scan;

use std::sync::Arc;

use thiserror::Error;

use crate::fundsys::{
    admissible_c, bessel_small_solution, connection_coefficients, hankel_solution, large_nu_solution,
    weber_solution, wronskian, FundsysError, RadialGrid, RadialPotential, RegimeSolution, SolverOptions,
};
use crate::phase::{PhaseError, SpectralPoint};
use crate::{Cplx, Real, ScaledC};

pub use bounds::{bound_grid, kernel_bound, verify_kernel_bound, BoundCertificate, CellKind, CellSummary, BOUND_FORMULA};
pub use operator::{
    green_residual, lanczos_norm, scaled_operator, split_panels, NormEstimate, DATA_SCALE_FLOOR, OPERATOR_KAPPA, PowerOptions, ResolventOperator, ResolventSolution,
    ScalingCheck, SeparableOperator,
};
pub use scan::{log_spaced, scan, scan_cell, ScanConfig, ScanReport, ScanRow, CSV_COLUMNS, CSV_SCHEMA};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResolventError {
    #[error("Wronskian {wronskian:e} is below {tolerance:e} times its natural scale {scale:e}")]
    DegenerateBasis { wronskian: Real, scale: Real, tolerance: Real },
    #[error("power iteration stalled after {iterations} steps (relative change {change:e})")]
    PowerIterationStall { iterations: usize, change: Real },
    #[error("nothing to assemble")]
    EmptyScan,
    #[error("omega = {omega} is below the configured floor omega0 = {omega0}")]
    OmegaBelowFloor { omega: Real, omega0: Real },
    #[error("large angular momentum branch needs nu >= 1, got {0}")]
    BranchUnavailable(Real),
    #[error(transparent)]
    Fundsys(#[from] FundsysError),
    #[error(transparent)]
    Phase(#[from] PhaseError),
}

impl ResolventError {
    /// True for Wronskian degeneracies, the signature of a nearby eigenvalue.
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Self::DegenerateBasis { .. } | Self::Fundsys(FundsysError::DegenerateBasis { .. }))
    }
}

/// Which recessive-at-zero solution the kernel is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// Bessel and Hankel regimes below `r = 1`.
    SmallEll,
    /// The large angular momentum Liouville-Green solution below `r = 1`.
    LargeEll,
}

impl Branch {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SmallEll => "small_ell",
            Self::LargeEll => "large_ell",
        }
    }
}

/// Relative Wronskian size below which a basis counts as degenerate.
pub const DEGENERACY_TOL: Real = 1e-6;

/// `coeff[0] first + coeff[1] second` of one regime solution on `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct Piece {
    pub lo: Real,
    pub hi: Real,
    pub solution: Arc<RegimeSolution>,
    pub coeff: [ScaledC; 2],
}

impl Piece {
    fn native(solution: &Arc<RegimeSolution>) -> Self {
        Self {
            lo: solution.lo(),
            hi: solution.hi(),
            solution: solution.clone(),
            coeff: [ScaledC::one(), ScaledC::zero()],
        }
    }

    fn eval(&self, r: Real) -> (ScaledC, ScaledC) {
        let (f, df) = self.solution.first(r);
        let mut v = f * self.coeff[0];
        let mut dv = df * self.coeff[0];
        if !self.coeff[1].is_zero() {
            let (g, dg) = self.solution.second(r);
            v = v + g * self.coeff[1];
            dv = dv + dg * self.coeff[1];
        }
        (v, dv)
    }
}

/// A homogeneous solution on `[r_min, r_max]` glued from regime pieces.
#[derive(Debug, Clone)]
pub struct GlobalSolution {
    pub pieces: Vec<Piece>,
}

impl GlobalSolution {
    /// `(v, v')` at `r`; radii outside the pieces use the nearest end piece.
    pub fn eval(&self, r: Real) -> (ScaledC, ScaledC) {
        let piece = self
            .pieces
            .iter()
            .find(|p| r <= p.hi)
            .unwrap_or_else(|| self.pieces.last().expect("at least one piece"));
        piece.eval(r)
    }
}

/// Coefficients of `f` in the basis of `sol` at `r`.
fn express(f: (ScaledC, ScaledC), sol: &RegimeSolution, r: Real) -> Result<[ScaledC; 2], FundsysError> {
    Ok(connection_coefficients([f, f], [sol.first(r), sol.second(r)], 1e-12)?[0])
}

/// Continue `global` into `sol` at the junction `r`, appending on the left
/// (`below`) or on the right.
fn extend(global: &mut GlobalSolution, sol: &Arc<RegimeSolution>, r: Real, below: bool) -> Result<(), FundsysError> {
    let coeff = express(global.eval(r), sol, r)?;
    let piece = Piece { lo: sol.lo(), hi: sol.hi(), solution: sol.clone(), coeff };
    if below {
        global.pieces.insert(0, piece);
    } else {
        global.pieces.push(piece);
    }
    Ok(())
}

/// The Green kernel of the reduced resolvent at one spectral point.
#[derive(Debug, Clone)]
pub struct GreenKernel {
    pub spectral: SpectralPoint,
    pub potential: RadialPotential,
    pub branch: Branch,
    /// `W(v_-, v0)`.
    pub wronskian: ScaledC,
    /// `|v_-| |v0'| + |v_-'| |v0|` at `r = 1`, the scale `wronskian` is judged against.
    pub wronskian_scale: Real,
    /// Largest relative deviation of `W(v_-, v0)` sampled over the grid.
    pub wronskian_drift: Real,
    /// `c` actually used for the Bessel/Hankel split.
    pub c: Real,
    /// `c omega^{-1/2}`; the Hankel regime is absent when this is `>= 1`.
    pub split: Real,
    pub r_min: Real,
    pub r_max: Real,
    /// Recessive at zero.
    pub v0: GlobalSolution,
    /// Recessive at infinity.
    pub v_minus: GlobalSolution,
    /// `sup |h - 1| r omega^{1/2}` of the Weber solution.
    pub envelope_weber: Real,
    /// `sup |h - 1| omega^{1/2}` of the Bessel solution, or for the large-ell
    /// branch `sup |h - 1| / (omega^{-1/2} + nu^{-1})`.
    pub envelope_bessel: Real,
}

fn sup_envelope(sol: &RegimeSolution, weight: impl Fn(Real) -> Real) -> Real {
    sol.panels.nodes.iter().zip(&sol.h).map(|(&r, h)| (h - 1.0).norm() * weight(r)).fold(0.0, Real::max)
}

/// Assemble `v0`, `v_-` and their Wronskian. `branch = None` picks the
/// small-ell branch for `nu <= nu0`.
pub fn build_green_kernel(
    p: &SpectralPoint,
    v: &RadialPotential,
    grid: &RadialGrid,
    opts: &SolverOptions,
    branch: Option<Branch>,
) -> Result<GreenKernel, ResolventError> {
    let o = SolverOptions { r_min: grid.r_min, r_max: grid.r_max, ..*opts };
    let branch = branch.unwrap_or(if p.nu <= o.nu0 { Branch::SmallEll } else { Branch::LargeEll });
    if branch == Branch::LargeEll && p.nu < 1.0 {
        return Err(ResolventError::BranchUnavailable(p.nu));
    }
    let sqrt_omega = p.omega.sqrt();
    let weber = Arc::new(weber_solution(p, v, &o)?);
    let envelope_weber = sup_envelope(&weber, |r| r * sqrt_omega);
    let mut v_minus = GlobalSolution { pieces: vec![Piece::native(&weber)] };

    let (c, mut v0, envelope_bessel) = match branch {
        Branch::SmallEll => {
            let c = admissible_c(p, o.c, o.hankel_floor);
            let split = c / sqrt_omega;
            let bessel = Arc::new(bessel_small_solution(p, v, split.min(1.0), &o)?);
            let env = sup_envelope(&bessel, |_| sqrt_omega);
            let mut v0 = GlobalSolution { pieces: vec![Piece::native(&bessel)] };
            if split < 1.0 {
                let hankel = Arc::new(hankel_solution(p, v, split, &o)?);
                extend(&mut v0, &hankel, split, false)?;
                extend(&mut v_minus, &hankel, 1.0, true)?;
                extend(&mut v_minus, &bessel, split, true)?;
            } else {
                extend(&mut v_minus, &bessel, 1.0, true)?;
            }
            (c, v0, env)
        }
        Branch::LargeEll => {
            let ln = Arc::new(large_nu_solution(p, v, &o)?);
            let env = sup_envelope(&ln, |_| 1.0 / (1.0 / sqrt_omega + 1.0 / p.nu));
            let v0 = GlobalSolution { pieces: vec![Piece::native(&ln)] };
            extend(&mut v_minus, &ln, 1.0, true)?;
            (o.c, v0, env)
        }
    };
    extend(&mut v0, &weber, 1.0, false)?;

    let at_one = (v_minus.eval(1.0), v0.eval(1.0));
    let w = wronskian(at_one.0, at_one.1);
    let scale = (at_one.0 .0.abs() * at_one.1 .1.abs()) + (at_one.0 .1.abs() * at_one.1 .0.abs());
    if !(w.abs() >= DEGENERACY_TOL * scale) {
        return Err(ResolventError::DegenerateBasis { wronskian: w.abs(), scale, tolerance: DEGENERACY_TOL });
    }
    let wronskian_drift = grid
        .points
        .iter()
        .map(|&r| (wronskian(v_minus.eval(r), v0.eval(r)) / w).to_complex())
        .map(|q| (q - 1.0).norm())
        .fold(0.0, Real::max);
    Ok(GreenKernel {
        spectral: *p,
        potential: *v,
        branch,
        wronskian: w,
        wronskian_scale: scale,
        wronskian_drift,
        c,
        split: c / sqrt_omega,
        r_min: grid.r_min,
        r_max: grid.r_max,
        v0,
        v_minus,
        envelope_weber,
        envelope_bessel,
    })
}

impl GreenKernel {
    /// `G(r, s)` in scaled form.
    pub fn eval(&self, r: Real, s: Real) -> ScaledC {
        let (lo, hi) = if r <= s { (r, s) } else { (s, r) };
        self.eval_with(r, s, self.v0.eval(lo).0, self.v_minus.eval(hi).0)
    }

    /// `G(r, s)` from precomputed `v0(min(r,s))` and `v_-(max(r,s))`.
    pub fn eval_with(&self, r: Real, s: Real, v0_lo: ScaledC, vm_hi: ScaledC) -> ScaledC {
        ScaledC::exp(Cplx::new(0.5 * (r * r - s * s), 0.0)) * v0_lo * vm_hi / self.wronskian
    }

    pub fn eval_complex(&self, r: Real, s: Real) -> Cplx {
        self.eval(r, s).to_complex()
    }

    /// Regime split points inside `(r_min, r_max)`.
    pub fn breakpoints(&self) -> Vec<Real> {
        let mut b = vec![];
        if self.split < 1.0 && self.split > self.r_min {
            b.push(self.split);
        }
        b.push(1.0);
        b
    }

    /// `W / e^{mu^{1/2}}` on the small-ell branch, which tends to a nonzero
    /// constant; `W` itself on the large-ell branch, which tends to one.
    pub fn normalized_wronskian(&self) -> Cplx {
        match self.branch {
            Branch::SmallEll => (self.wronskian / ScaledC::exp(self.spectral.sqrt_mu())).to_complex(),
            Branch::LargeEll => self.wronskian.to_complex(),
        }
    }
}

#[cfg(test)]
mod tests;
