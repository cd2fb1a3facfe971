//! Volterra equations `h = 1 + int K h`.
//!
//! For the regime kernels `K(x,s) = (rho(x) A(s)^2 - A(s) B(s)) P(s) / w` with
//! `rho = B/A`, each Picard step reduces to two running integrals, so a step
//! costs `O(N)` panel operations. A dense Nystrom solver for general kernels
//! is provided alongside.

use crate::{Cplx, Real, ScaledC};

use super::grid::{reference_panel, PanelSet, PANEL_NODES};
use super::leading::LeadingOrder;
use super::FundsysError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    FromZero,
    FromInfinity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolterraOptions {
    pub tol: Real,
    pub max_iter: usize,
    /// Largest admissible `m0 = int sup_x |K(x, s)| ds`.
    pub m0_cap: Real,
}

impl Default for VolterraOptions {
    fn default() -> Self {
        Self { tol: 1e-13, max_iter: 200, m0_cap: 20.0 }
    }
}

/// Picard fixed point on panel nodes.
#[derive(Debug, Clone)]
pub struct VolterraSolution {
    pub h: Vec<Cplx>,
    pub dh: Vec<Cplx>,
    pub iterations: usize,
    pub m0: Real,
    pub last_change: Real,
}

/// Solve the gauge equation for `v = A h` on `panels`.
///
/// `start = (I1, I2/A^2)` are the running integrals at the starting end
/// (`lo` for [`Direction::FromZero`], `hi` otherwise).
pub fn separable_volterra(
    panels: &PanelSet,
    base: &dyn LeadingOrder,
    partner: &dyn LeadingOrder,
    w: Cplx,
    direction: Direction,
    start: (Cplx, Cplx),
    opts: &VolterraOptions,
) -> Result<VolterraSolution, FundsysError> {
    let gp = reference_panel();
    let n = panels.len();
    let np = panels.panel_count();
    let a: Vec<ScaledC> = panels.nodes.iter().map(|&r| base.value(r)).collect();
    let b: Vec<ScaledC> = panels.nodes.iter().map(|&r| partner.value(r)).collect();
    let pert: Vec<Cplx> = panels.nodes.iter().map(|&r| base.perturbation(r)).collect();
    let ab: Vec<Cplx> = a.iter().zip(&b).map(|(x, y)| (*x * *y).to_complex()).collect();
    let a_edge: Vec<ScaledC> = panels.edges.iter().map(|&r| base.value(r)).collect();

    // (A_j / A_i)^2 within each panel, and the ratios to the panel ends
    let mut sq = vec![Cplx::new(0.0, 0.0); n * PANEL_NODES];
    let mut to_start = vec![Cplx::new(0.0, 0.0); n];
    let mut to_end = vec![Cplx::new(0.0, 0.0); n];
    let mut end_factor = vec![Cplx::new(0.0, 0.0); np];
    for k in 0..np {
        let (e_in, e_out) = match direction {
            Direction::FromZero => (a_edge[k], a_edge[k + 1]),
            Direction::FromInfinity => (a_edge[k + 1], a_edge[k]),
        };
        end_factor[k] = ((e_in / e_out).powi(2)).to_complex();
        for i in 0..PANEL_NODES {
            let gi = k * PANEL_NODES + i;
            to_start[gi] = ((e_in / a[gi]).powi(2)).to_complex();
            to_end[gi] = ((a[gi] / e_out).powi(2)).to_complex();
            for j in 0..PANEL_NODES {
                let gj = k * PANEL_NODES + j;
                sq[gi * PANEL_NODES + j] = ((a[gj] / a[gi]).powi(2)).to_complex();
            }
        }
    }

    // m0 = int |A B P| (1 + sup_{x beyond s} |rho(x)/rho(s)|) / |w|
    let ln_rho: Vec<Real> = a.iter().zip(&b).map(|(x, y)| y.ln_abs() - x.ln_abs()).collect();
    let mut m0 = 0.0;
    let mut run = Real::NEG_INFINITY;
    let order: Box<dyn Iterator<Item = usize>> = match direction {
        Direction::FromZero => Box::new((0..n).rev()),
        Direction::FromInfinity => Box::new(0..n),
    };
    for s in order {
        run = run.max(ln_rho[s]);
        m0 += panels.weights[s] * (ab[s] * pert[s]).norm() * (1.0 + (run - ln_rho[s]).exp()) / w.norm();
    }
    // the tail data stands in for the kernel beyond the starting end
    let ab_sup = ab.iter().map(|x| x.norm()).fold(0.0, Real::max);
    m0 += (start.0.norm() + start.1.norm() * ab_sup) / w.norm();
    if !(m0 <= opts.m0_cap) {
        return Err(FundsysError::KernelNotIntegrable { m0, cap: opts.m0_cap });
    }

    let mut h = vec![Cplx::new(1.0, 0.0); n];
    let mut dh = vec![Cplx::new(0.0, 0.0); n];
    let mut next = vec![Cplx::new(0.0, 0.0); n];
    let mut f = [Cplx::new(0.0, 0.0); PANEL_NODES];
    let bound = m0.exp() * (1.0 + 10.0 * opts.tol);
    for iter in 1..=opts.max_iter {
        let (mut i1, mut j2) = start;
        let panel_order: Box<dyn Iterator<Item = usize>> = match direction {
            Direction::FromZero => Box::new(0..np),
            Direction::FromInfinity => Box::new((0..np).rev()),
        };
        for k in panel_order {
            let hw = panels.half_width(k);
            let base_idx = k * PANEL_NODES;
            for j in 0..PANEL_NODES {
                f[j] = pert[base_idx + j] * h[base_idx + j];
            }
            let mat = match direction {
                Direction::FromZero => &gp.left,
                Direction::FromInfinity => &gp.right,
            };
            for i in 0..PANEL_NODES {
                let gi = base_idx + i;
                let row = &mat[i];
                let sqi = &sq[gi * PANEL_NODES..(gi + 1) * PANEL_NODES];
                let mut s2 = Cplx::new(0.0, 0.0);
                let mut s1 = Cplx::new(0.0, 0.0);
                for j in 0..PANEL_NODES {
                    s2 += f[j] * sqi[j] * row[j];
                    s1 += f[j] * ab[base_idx + j] * row[j];
                }
                let ji = to_start[gi] * j2 + s2 * hw;
                let ii = i1 + s1 * hw;
                match direction {
                    Direction::FromZero => {
                        next[gi] = 1.0 + (ab[gi] * ji - ii) / w;
                        dh[gi] = ji;
                    }
                    Direction::FromInfinity => {
                        next[gi] = 1.0 + (ii - ab[gi] * ji) / w;
                        dh[gi] = -ji;
                    }
                }
            }
            let mut e2 = Cplx::new(0.0, 0.0);
            let mut e1 = Cplx::new(0.0, 0.0);
            for j in 0..PANEL_NODES {
                let wj = gp.weights[j];
                e2 += f[j] * to_end[base_idx + j] * wj;
                e1 += f[j] * ab[base_idx + j] * wj;
            }
            j2 = end_factor[k] * j2 + e2 * hw;
            i1 += e1 * hw;
        }
        let change = next.iter().zip(&h).map(|(x, y)| (x - y).norm()).fold(0.0, Real::max);
        let sup = next.iter().map(|x| x.norm()).fold(0.0, Real::max);
        if !sup.is_finite() || sup > bound {
            return Err(FundsysError::DivergenceDetected { sup, bound });
        }
        std::mem::swap(&mut h, &mut next);
        if change < opts.tol {
            return Ok(VolterraSolution { h, dh, iterations: iter, m0, last_change: change });
        }
    }
    let change = next.iter().zip(&h).map(|(x, y)| (x - y).norm()).fold(0.0, Real::max);
    Err(FundsysError::VolterraNoConvergence { iterations: opts.max_iter, change })
}

/// Dense solution of `h(x) = 1 + int K(x, y) h(y) dy` over `[x, X]`
/// ([`Direction::FromInfinity`]) or `[X0, x]` ([`Direction::FromZero`]).
#[derive(Debug, Clone)]
pub struct DenseVolterra {
    pub nodes: Vec<Real>,
    pub h: Vec<Cplx>,
    pub envelope: Vec<Real>,
    pub iterations: usize,
    pub m0: Real,
}

pub fn volterra_solve<K: Fn(Real, Real) -> Cplx>(
    kernel: K,
    direction: Direction,
    domain: (Real, Real),
    panels: usize,
    opts: &VolterraOptions,
) -> Result<DenseVolterra, FundsysError> {
    let (lo, hi) = domain;
    let edges: Vec<Real> = (0..=panels).map(|k| lo + (hi - lo) * k as Real / panels as Real).collect();
    let set = PanelSet::from_edges(edges);
    let gp = reference_panel();
    let n = set.len();
    let mut mat = vec![Cplx::new(0.0, 0.0); n * n];
    for i in 0..n {
        let ki = i / PANEL_NODES;
        let li = i % PANEL_NODES;
        let hw = set.half_width(ki);
        for j in 0..n {
            let kj = j / PANEL_NODES;
            let lj = j % PANEL_NODES;
            let weight = match direction {
                Direction::FromInfinity if kj > ki => set.weights[j],
                Direction::FromZero if kj < ki => set.weights[j],
                Direction::FromInfinity if kj == ki => hw * gp.right[li][lj],
                Direction::FromZero if kj == ki => hw * gp.left[li][lj],
                _ => 0.0,
            };
            if weight != 0.0 {
                mat[i * n + j] = kernel(set.nodes[i], set.nodes[j]) * weight;
            }
        }
    }
    let mut m0 = 0.0;
    for j in 0..n {
        let sup = (0..n)
            .filter(|&i| match direction {
                Direction::FromInfinity => set.nodes[i] <= set.nodes[j],
                Direction::FromZero => set.nodes[i] >= set.nodes[j],
            })
            .map(|i| kernel(set.nodes[i], set.nodes[j]).norm())
            .fold(0.0, Real::max);
        m0 += set.weights[j] * sup;
    }
    if !(m0 <= opts.m0_cap) {
        return Err(FundsysError::KernelNotIntegrable { m0, cap: opts.m0_cap });
    }
    let bound = m0.exp() * (1.0 + 10.0 * opts.tol);
    let mut h = vec![Cplx::new(1.0, 0.0); n];
    for iter in 1..=opts.max_iter {
        let next: Vec<Cplx> = (0..n)
            .map(|i| 1.0 + (0..n).map(|j| mat[i * n + j] * h[j]).sum::<Cplx>())
            .collect();
        let change = next.iter().zip(&h).map(|(x, y)| (x - y).norm()).fold(0.0, Real::max);
        let sup = next.iter().map(|x| x.norm()).fold(0.0, Real::max);
        if !sup.is_finite() || sup > bound {
            return Err(FundsysError::DivergenceDetected { sup, bound });
        }
        h = next;
        if change < opts.tol {
            let envelope = h.iter().map(|x| (x - 1.0).norm()).collect();
            return Ok(DenseVolterra { nodes: set.nodes, h, envelope, iterations: iter, m0 });
        }
    }
    Err(FundsysError::VolterraNoConvergence { iterations: opts.max_iter, change: Real::NAN })
}

