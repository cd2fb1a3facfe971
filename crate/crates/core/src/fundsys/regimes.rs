//! Regime solutions: a Volterra-corrected first solution `A h` and a second
//! solution from the reduction ansatz `u (c + kappa int_{x0}^x u^{-2})`.
//!
//! The second solution is stored through `T = u^2 (c + kappa int u^{-2})`,
//! which obeys `T' = 2 (u'/u) T + kappa` and is swept in the direction in
//! which `|u|` decreases, so the recurrence is contractive.


use std::sync::Arc;

use crate::complexmath::{adaptive_quad_semi_infinite, BesselKind};
use crate::phase::SpectralPoint;
use crate::{Cplx, Real, ScaledC};

use super::grid::{reference_panel, resolution_scale, PanelSet, PANEL_NODES};
use super::leading::{
    BesselLead, LargeNuLead, LeadingOrder, PhaseTable, WeberLead, W_HPLUS_HMINUS, W_J_HPLUS, W_J_Y,
};
use super::volterra::{separable_volterra, Direction};
use super::{FundsysError, RadialPotential, Regime, SolverOptions};

/// Which way the reduction recurrence runs from its anchor `x0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    Up,
    Down,
}

pub struct RegimeSolution {
    pub regime: Regime,
    pub panels: PanelSet,
    pub base: Box<dyn LeadingOrder>,
    pub h: Vec<Cplx>,
    pub dh: Vec<Cplx>,
    pub t: Vec<Cplx>,
    /// `W(first, second)`, exact by construction.
    pub kappa: Cplx,
    pub iterations: usize,
    pub m0: Real,
    /// First solution and its derivative at the nodes.
    pub first_nodes: Vec<(ScaledC, ScaledC)>,
}

impl std::fmt::Debug for RegimeSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RegimeSolution")
            .field("regime", &self.regime)
            .field("interval", &(self.panels.lo(), self.panels.hi()))
            .field("nodes", &self.panels.len())
            .field("kappa", &self.kappa)
            .finish()
    }
}

impl RegimeSolution {
    pub fn lo(&self) -> Real {
        self.panels.lo()
    }

    pub fn hi(&self) -> Real {
        self.panels.hi()
    }

    fn gauge_at(&self, r: Real) -> (Cplx, Cplx, Cplx) {
        let (k, t) = self.panels.locate(r);
        let gp = reference_panel();
        let h = gp.interpolate(self.panels.panel(&self.h, k), t);
        let dh = gp.interpolate(self.panels.panel(&self.dh, k), t);
        let tt = gp.interpolate(self.panels.panel(&self.t, k), t);
        (h, dh, tt)
    }

    /// `h(r)` of the first solution.
    pub fn h_at(&self, r: Real) -> Cplx {
        self.gauge_at(r).0
    }

    /// `(v, v')` of the first solution.
    pub fn first(&self, r: Real) -> (ScaledC, ScaledC) {
        let (h, dh, _) = self.gauge_at(r);
        let a = self.base.value(r);
        let g = self.base.log_derivative(r);
        (a * h, a * (g * h + dh))
    }

    /// `(v, v')` of the second solution.
    pub fn second(&self, r: Real) -> (ScaledC, ScaledC) {
        let (h, dh, t) = self.gauge_at(r);
        let a = self.base.value(r);
        let g = self.base.log_derivative(r);
        second_from(a * h, g + dh / h, t, self.kappa)
    }

    /// Both solutions at node `i`.
    pub fn at_node(&self, i: usize) -> [(ScaledC, ScaledC); 2] {
        let (u, du) = self.first_nodes[i];
        let g = (du / u).to_complex();
        [(u, du), second_from(u, g, self.t[i], self.kappa)]
    }
}

fn second_from(u: ScaledC, g: Cplx, t: Cplx, kappa: Cplx) -> (ScaledC, ScaledC) {
    let inv = u.recip();
    let v = inv * t;
    (v, v * g + inv * kappa)
}

struct Reduction {
    anchor_value: Cplx,
    kappa: Cplx,
    sweep: Sweep,
}

fn reduce(panels: &PanelSet, base: &dyn LeadingOrder, h: &[Cplx], red: &Reduction) -> Vec<Cplx> {
    let gp = reference_panel();
    let np = panels.panel_count();
    let u: Vec<ScaledC> = panels.nodes.iter().zip(h).map(|(&r, &hv)| base.value(r) * hv).collect();
    let u_edge: Vec<ScaledC> = (0..=np)
        .map(|e| {
            let (k, t) = if e == np { (np - 1, 1.0) } else { (e, -1.0) };
            base.value(panels.edges[e]) * gp.interpolate(panels.panel(h, k), t)
        })
        .collect();
    let mut out = vec![Cplx::new(0.0, 0.0); panels.len()];
    let ratio2 = |x: ScaledC, y: ScaledC| ((x / y).powi(2)).to_complex();
    match red.sweep {
        Sweep::Up => {
            let mut t_in = (u_edge[0].powi(2) * red.anchor_value).to_complex();
            for k in 0..np {
                let hw = panels.half_width(k);
                let a = u_edge[k];
                for i in 0..PANEL_NODES {
                    let gi = k * PANEL_NODES + i;
                    let s: Cplx = (0..PANEL_NODES)
                        .map(|j| ratio2(u[gi], u[k * PANEL_NODES + j]) * gp.left[i][j])
                        .sum();
                    out[gi] = ratio2(u[gi], a) * t_in + red.kappa * hw * s;
                }
                let b = u_edge[k + 1];
                let s: Cplx = (0..PANEL_NODES)
                    .map(|j| ratio2(b, u[k * PANEL_NODES + j]) * gp.weights[j])
                    .sum();
                t_in = ratio2(b, a) * t_in + red.kappa * hw * s;
            }
        }
        Sweep::Down => {
            let mut t_in = (u_edge[np].powi(2) * red.anchor_value).to_complex();
            for k in (0..np).rev() {
                let hw = panels.half_width(k);
                let b = u_edge[k + 1];
                for i in 0..PANEL_NODES {
                    let gi = k * PANEL_NODES + i;
                    let s: Cplx = (0..PANEL_NODES)
                        .map(|j| ratio2(u[gi], u[k * PANEL_NODES + j]) * gp.right[i][j])
                        .sum();
                    out[gi] = ratio2(u[gi], b) * t_in - red.kappa * hw * s;
                }
                let a = u_edge[k];
                let s: Cplx = (0..PANEL_NODES)
                    .map(|j| ratio2(a, u[k * PANEL_NODES + j]) * gp.weights[j])
                    .sum();
                t_in = ratio2(a, b) * t_in - red.kappa * hw * s;
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn build(
    regime: Regime,
    panels: PanelSet,
    base: Box<dyn LeadingOrder>,
    partner: &dyn LeadingOrder,
    w: Cplx,
    direction: Direction,
    start: (Cplx, Cplx),
    red: Reduction,
    opts: &SolverOptions,
) -> Result<RegimeSolution, FundsysError> {
    let sol = separable_volterra(&panels, base.as_ref(), partner, w, direction, start, &opts.volterra)?;
    let t = reduce(&panels, base.as_ref(), &sol.h, &red);
    let first_nodes = panels
        .nodes
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let a = base.value(r);
            let g = base.log_derivative(r);
            (a * sol.h[i], a * (g * sol.h[i] + sol.dh[i]))
        })
        .collect();
    Ok(RegimeSolution {
        regime,
        panels,
        base,
        h: sol.h,
        dh: sol.dh,
        t,
        kappa: red.kappa,
        iterations: sol.iterations,
        m0: sol.m0,
        first_nodes,
    })
}

fn panels_for(p: &SpectralPoint, lo: Real, hi: Real, opts: &SolverOptions) -> PanelSet {
    PanelSet::adapted(lo, hi, opts.panel_kappa, |r| resolution_scale(p, r))
}

/// `v_-` (Volterra from infinity) and `v_+` on `[1, r_max]`, `W(v_-, v_+) = 1`.
pub fn weber_solution(
    p: &SpectralPoint,
    v: &RadialPotential,
    opts: &SolverOptions,
) -> Result<RegimeSolution, FundsysError> {
    let panels = panels_for(p, 1.0, opts.r_max, opts);
    let table = Arc::new(PhaseTable::new(p, &panels.edges));
    let minus = WeberLead { p: *p, v: *v, sign: -1.0, table: table.clone() };
    let plus = WeberLead { p: *p, v: *v, sign: 1.0, table };
    // Beyond r_max the kernel is P/(2p) to leading order, and I2/A^2 ~ P/(2p).
    let rmax = opts.r_max;
    let tail = adaptive_quad_semi_infinite(
        |s| minus.perturbation(s) / (2.0 * p.lg_momentum(s)),
        rmax,
        1e-15,
    )?
    .value;
    let i2 = minus.perturbation(rmax) / (2.0 * p.lg_momentum(rmax));
    let red = Reduction { anchor_value: Cplx::new(1.0, 0.0), kappa: Cplx::new(1.0, 0.0), sweep: Sweep::Up };
    build(
        Regime::Weber,
        panels,
        Box::new(minus),
        &plus,
        Cplx::new(1.0, 0.0),
        Direction::FromInfinity,
        (tail, i2),
        red,
        opts,
    )
}

/// `v_0` (Volterra from zero around `sqrt r J_nu`) and `v_1` on `[r_min, r_b]`,
/// `W(v_0, v_1) = 2/pi`.
pub fn bessel_small_solution(
    p: &SpectralPoint,
    v: &RadialPotential,
    r_b: Real,
    opts: &SolverOptions,
) -> Result<RegimeSolution, FundsysError> {
    let panels = panels_for(p, opts.r_min, r_b, opts);
    let j = BesselLead::new(p, v, BesselKind::J);
    let hp = BesselLead::new(p, v, BesselKind::HPlus);
    let y = BesselLead::new(p, v, BesselKind::Y);
    let anchor = (y.value(r_b) / j.value(r_b)).to_complex();
    let red = Reduction { anchor_value: anchor, kappa: W_J_Y, sweep: Sweep::Down };
    build(
        Regime::BesselSmall,
        panels,
        Box::new(j),
        &hp,
        W_J_HPLUS,
        Direction::FromZero,
        (Cplx::new(0.0, 0.0), Cplx::new(0.0, 0.0)),
        red,
        opts,
    )
}

/// `v~_-` (Volterra from `r = 1` inward around `sqrt r H+`) and `v~_+` on
/// `[r_b, 1]`, `W = -4i/pi`.
pub fn hankel_solution(
    p: &SpectralPoint,
    v: &RadialPotential,
    r_b: Real,
    opts: &SolverOptions,
) -> Result<RegimeSolution, FundsysError> {
    let panels = panels_for(p, r_b, 1.0, opts);
    let hp = BesselLead::new(p, v, BesselKind::HPlus);
    let hm = BesselLead::new(p, v, BesselKind::HMinus);
    let anchor = (hm.value(r_b) / hp.value(r_b)).to_complex();
    let red = Reduction { anchor_value: anchor, kappa: W_HPLUS_HMINUS, sweep: Sweep::Up };
    build(
        Regime::Hankel,
        panels,
        Box::new(hp),
        &hm,
        W_HPLUS_HMINUS,
        Direction::FromInfinity,
        (Cplx::new(0.0, 0.0), Cplx::new(0.0, 0.0)),
        red,
        opts,
    )
}

/// `v^_0` (Volterra from zero around `psi_+`) and `v^_1` on `[r_min, 1]`,
/// `W(v^_0, v^_1) = -1`.
pub fn large_nu_solution(
    p: &SpectralPoint,
    v: &RadialPotential,
    opts: &SolverOptions,
) -> Result<RegimeSolution, FundsysError> {
    if p.nu < 1.0 {
        return Err(FundsysError::Phase(crate::phase::PhaseError::AlphaUndefined(p.nu)));
    }
    let panels = panels_for(p, opts.r_min, 1.0, opts);
    let plus = LargeNuLead::new(p, v, 1.0);
    let minus = LargeNuLead::new(p, v, -1.0);
    let red = Reduction { anchor_value: Cplx::new(1.0, 0.0), kappa: Cplx::new(-1.0, 0.0), sweep: Sweep::Down };
    build(
        Regime::BesselLargeNu,
        panels,
        Box::new(plus),
        &minus,
        Cplx::new(-1.0, 0.0),
        Direction::FromZero,
        (Cplx::new(0.0, 0.0), Cplx::new(0.0, 0.0)),
        red,
        opts,
    )
}

/// Largest accepted `(|H+| |H-'| + |H+'| |H-|) / |W(H+, H-)|` at the lower
/// end of the Hankel regime. Below `|i mu^{1/2} r| ~ nu / sqrt 2` this ratio
/// grows like a power of `nu`, while above it the recessive Hankel solution
/// can only be written in the `(J, Y)` basis with heavy cancellation, so the
/// split is placed at the first radius where the Hankel basis is well
/// conditioned.
pub const HANKEL_CONDITION_MAX: Real = 10.0;

/// Condition number of the Hankel basis at `r`.
pub fn hankel_condition(p: &SpectralPoint, r: Real) -> Real {
    let z = Cplx::i() * p.sqrt_mu() * r;
    let pair = |kind| crate::complexmath::half_integer_bessel_scaled_pair(kind, p.nu, z).expect("off the cut");
    let (hp, dhp) = pair(BesselKind::HPlus);
    let (hm, dhm) = pair(BesselKind::HMinus);
    let w = (hp * dhm - dhp * hm).abs();
    (hp.abs() * dhm.abs() + dhp.abs() * hm.abs()) / w
}

/// Smallest `c >= c0` (raised by factors of 1.05) such that the Hankel basis
/// is well conditioned at `c omega^{-1/2}` and the Volterra reference `H+`
/// stays zero-free on `[c omega^{-1/2}, 1]`: its Hankel sum must keep modulus
/// at least `floor`. `H-` enters only through the reduction quotient, which
/// never divides by it.
pub fn admissible_c(p: &SpectralPoint, c0: Real, floor: Real) -> Real {
    let n = crate::complexmath::half_integer_index(p.nu).expect("half-integer order");
    let k = Cplx::i() * p.sqrt_mu();
    let mut c = c0;
    loop {
        let lo = c / p.omega.sqrt();
        if lo >= 1.0 {
            return c;
        }
        let ok = hankel_condition(p, lo) <= HANKEL_CONDITION_MAX
            && (0..=200).all(|i| {
                let r = lo * (1.0 / lo).powf(i as Real / 200.0);
                crate::complexmath::hankel_polynomial(1, n, k * r).norm() >= floor
            });
        if ok {
            return c;
        }
        c *= 1.05;
    }
}

