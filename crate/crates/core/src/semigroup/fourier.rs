//! `(|xi|^2 - 2 xi . grad_xi) u^ = f^`, the Fourier image of `(2d - L0) u = f`,
//! solved ray by ray as `u^(r) = int_r^inf e^{-(s^2 - r^2)/4} f^(s) / (2s) ds`.

use crate::angular::{GridFunction3D, RadialFunction};
use crate::complexmath::{half_integer_bessel, BesselKind};
use crate::fundsys::{reference_panel, PanelSet, PANEL_NODES};
use crate::{Cplx, Real};

use super::{check_dimension, SemigroupError};

/// Kernel of the solution map on `L^2(r^{d-1} dr)` in unitary form,
/// `1/2 r^{(d-1)/2} e^{-(s^2-r^2)/4} s^{-(d+1)/2}` for `s >= r`, else 0.
pub fn fourier_kernel(d: u32, r: Real, s: Real) -> Real {
    if s < r {
        return 0.0;
    }
    0.5 * r.powf(0.5 * (d as Real - 1.0)) * (-(s * s - r * r) / 4.0).exp() * s.powf(-0.5 * (d as Real + 1.0))
}

/// `sup |K(r,s)| / min(1/r, 1/s)` over pairs of `radii`.
pub fn fourier_kernel_ratio_sup(d: u32, radii: &[Real]) -> Real {
    let mut sup: Real = 0.0;
    for &r in radii {
        for &s in radii {
            sup = sup.max(fourier_kernel(d, r, s) / (1.0 / r).min(1.0 / s));
        }
    }
    sup
}

/// Solution `u^` on the nodes of `f^` with the kernel bound ratio over them.
#[derive(Debug, Clone)]
pub struct FourierResolvent {
    pub u_hat: RadialFunction,
    pub kernel_ratio_sup: Real,
}

/// Solve along one ray; `f_hat` is treated as zero beyond its last node.
pub fn free_resolvent_fourier(f_hat: &RadialFunction, d: u32) -> Result<FourierResolvent, SemigroupError> {
    check_dimension(d)?;
    let values = solve_ray(&f_hat.panels, &f_hat.values);
    Ok(FourierResolvent {
        u_hat: RadialFunction { panels: f_hat.panels.clone(), values },
        kernel_ratio_sup: fourier_kernel_ratio_sup(d, &f_hat.panels.nodes),
    })
}

/// The nodal solution map, shared by the radial and ray-wise forms.
pub(crate) fn solve_ray(panels: &PanelSet, f: &[Cplx]) -> Vec<Cplx> {
    let gp = reference_panel();
    let m = PANEL_NODES;
    let nodes = &panels.nodes;
    let mut out = vec![Cplx::new(0.0, 0.0); nodes.len()];
    for (i, &r) in nodes.iter().enumerate() {
        let k = i / m;
        let g = |j: usize| f[j] * ((r * r - nodes[j] * nodes[j]) / 4.0).exp() / (2.0 * nodes[j]);
        let hw = panels.half_width(k);
        // partial panel [r, edge_{k+1}], then whole panels beyond
        let mut acc: Cplx = (0..m).map(|j| g(k * m + j) * gp.right[i % m][j]).sum::<Cplx>() * hw;
        for j in (k + 1) * m..nodes.len() {
            acc += g(j) * panels.weights[j];
        }
        out[i] = acc;
    }
    out
}

/// `(2 pi)^{-d/2} r^{1-d/2} int g(k) J_{d/2-1}(k r) k^{d/2} dk`, the inverse
/// Fourier transform of the radial function `g(|xi|)` in `R^d`.
pub fn inverse_radial_fourier(g: &RadialFunction, d: u32, r: Real) -> Result<Cplx, SemigroupError> {
    check_dimension(d)?;
    let half_d = 0.5 * d as Real;
    let mut acc = Cplx::new(0.0, 0.0);
    for ((&k, &w), v) in g.panels.nodes.iter().zip(&g.panels.weights).zip(&g.values) {
        let j = half_integer_bessel(BesselKind::J, half_d - 1.0, Cplx::new(k * r, 0.0))?;
        acc += v * j * (w * k.powf(half_d));
    }
    Ok(acc * (2.0 * std::f64::consts::PI).powf(-half_d) * r.powf(1.0 - half_d))
}

/// Panels on `[0, k_max]`: geometric towards 0, where `u^` has a logarithmic
/// singularity, then uniform of width at most `h`.
pub fn fourier_panels(k_max: Real, h: Real) -> PanelSet {
    let mut edges: Vec<Real> = (0..=22).map(|j| 10f64.powf(0.5 * j as Real - 12.0)).collect();
    edges.insert(0, 0.0);
    let n = ((k_max - 0.1) / h).ceil() as usize;
    edges.extend((1..=n).map(|j| 0.1 + (k_max - 0.1) * j as Real / n as Real));
    PanelSet::from_edges(edges)
}

/// Largest `|(2d - L0) u - f| / max|f|` over `points`, with `u`, `f` the
/// inverse transforms of the solution and of `f^`, and `L0` applied to `u` by
/// five-point differences of step `h`.
pub fn fourier_residual(f_hat: &RadialFunction, d: u32, points: &[Real], h: Real) -> Result<Real, SemigroupError> {
    let sol = free_resolvent_fourier(f_hat, d)?;
    let dd = d as Real;
    let mut worst: Real = 0.0;
    let mut fmax: Real = 0.0;
    for &r in points {
        let u: Vec<Cplx> = [-2.0, -1.0, 0.0, 1.0, 2.0]
            .iter()
            .map(|j| inverse_radial_fourier(&sol.u_hat, d, r + j * h))
            .collect::<Result<_, _>>()?;
        let d1 = (u[0] - 8.0 * u[1] + 8.0 * u[3] - u[4]) / (12.0 * h);
        let d2 = (-u[0] + 16.0 * u[1] - 30.0 * u[2] + 16.0 * u[3] - u[4]) / (12.0 * h * h);
        let lhs = 2.0 * dd * u[2] - d2 - (dd - 1.0) / r * d1 + 2.0 * r * d1;
        let f = inverse_radial_fourier(f_hat, d, r)?;
        fmax = fmax.max(f.norm());
        worst = worst.max((lhs - f).norm());
    }
    if fmax == 0.0 {
        return Err(SemigroupError::QuadratureFailure("f vanishes at every residual point".into()));
    }
    Ok(worst / fmax)
}

/// The same solution map applied along every ray of a three-dimensional grid.
pub fn free_resolvent_fourier_grid(f_hat: &GridFunction3D) -> GridFunction3D {
    f_hat.map_rays(|ray| solve_ray(&f_hat.radial, ray))
}
