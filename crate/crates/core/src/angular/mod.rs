//! Spherical-harmonic projection and embedding in `d = 3`, and the assembly
//! of a full-space norm bound from per-angular-momentum norms.
//!
//! Functions on `R^3` are sampled on a product of radial Gauss panels and a
//! Gauss x uniform sphere rule. `Y_{l,m}` are the real orthonormal harmonics,
//! `cos(m phi)` for `m > 0` and `sin(|m| phi)` for `m < 0`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use thiserror::Error;

use crate::complexmath::gauss_legendre_reference;
use crate::fundsys::PanelSet;
use crate::resolvent::{lanczos_norm, NormEstimate, PowerOptions, ResolventError, ResolventOperator};
use crate::{Cplx, Real};

/// Default harmonic degree resolved by [`SphereQuadrature`].
pub const DEFAULT_ELL_MAX: u32 = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AngularError {
    #[error("(ell, m) = ({ell}, {m}) is not admissible: need |m| <= ell")]
    InvalidIndex { ell: u32, m: i64 },
    #[error("ell = {ell} exceeds the sphere quadrature's exactness limit ell_max = {ell_max}")]
    IndexBeyondQuadrature { ell: u32, ell_max: u32 },
    #[error("nothing to assemble")]
    EmptyScan,
    #[error("operators must share one radial panel set")]
    MismatchedPanels,
    #[error(transparent)]
    Resolvent(#[from] ResolventError),
}

/// `(ell, m)` with `|m| <= ell`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AngularIndex {
    ell: u32,
    m: i32,
}

impl AngularIndex {
    pub fn new(ell: u32, m: i32) -> Result<Self, AngularError> {
        if m.unsigned_abs() > ell {
            return Err(AngularError::InvalidIndex { ell, m: m as i64 });
        }
        Ok(Self { ell, m })
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn m(&self) -> i32 {
        self.m
    }

    /// All indices with `ell <= ell_max`, ordered by `ell` then `m`.
    pub fn all_up_to(ell_max: u32) -> Vec<Self> {
        (0..=ell_max).flat_map(|ell| (-(ell as i32)..=ell as i32).map(move |m| Self { ell, m })).collect()
    }
}

/// Orthonormal associated Legendre values `p_{l,m}(x)` for `l = m..=ell_max`,
/// normalised so that `2 pi int p_{l,m}^2 dx = 1`.
fn legendre_column(m: u32, ell_max: u32, x: Real) -> Vec<Real> {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 0.5 / PI.sqrt();
    for k in 1..=m {
        let k = k as Real;
        pmm *= -((2.0 * k + 1.0) / (2.0 * k)).sqrt() * s;
    }
    let mut out = vec![pmm];
    if ell_max == m {
        return out;
    }
    out.push((2.0 * m as Real + 3.0).sqrt() * x * pmm);
    let mf = m as Real;
    for l in (m + 2)..=ell_max {
        let lf = l as Real;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
        let n = out.len();
        out.push(a * (x * out[n - 1] - b * out[n - 2]));
    }
    out
}

/// Real orthonormal `Y_{l,m}` at polar cosine `x = cos(theta)` and azimuth `phi`.
pub fn real_spherical_harmonic(idx: AngularIndex, x: Real, phi: Real) -> Real {
    let am = idx.m.unsigned_abs();
    let p = *legendre_column(am, idx.ell, x).last().unwrap();
    match idx.m {
        0 => p,
        m if m > 0 => std::f64::consts::SQRT_2 * p * (m as Real * phi).cos(),
        m => std::f64::consts::SQRT_2 * p * ((-m) as Real * phi).sin(),
    }
}

/// Product rule: Gauss-Legendre in `cos(theta)` with `ell_max + 1` nodes and
/// `2 ell_max + 2` equispaced azimuths, exact for polynomials of degree
/// `2 ell_max + 1` on the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereQuadrature {
    pub ell_max: u32,
    /// `cos(theta)` nodes.
    pub cos_theta: Vec<Real>,
    pub phi: Vec<Real>,
    /// Weight per point, `theta`-major.
    pub weights: Vec<Real>,
}

impl SphereQuadrature {
    pub fn new(ell_max: u32) -> Self {
        let nt = ell_max as usize + 1;
        let np = 2 * ell_max as usize + 2;
        let (x, w) = gauss_legendre_reference::<Real>(nt);
        let phi: Vec<Real> = (0..np).map(|k| 2.0 * PI * k as Real / np as Real).collect();
        let dphi = 2.0 * PI / np as Real;
        let weights = w.iter().flat_map(|wt| std::iter::repeat_n(wt * dphi, np)).collect();
        Self { ell_max, cos_theta: x, phi, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Unit vector of point `j`.
    pub fn direction(&self, j: usize) -> [Real; 3] {
        let np = self.phi.len();
        let (x, phi) = (self.cos_theta[j / np], self.phi[j % np]);
        let s = (1.0 - x * x).max(0.0).sqrt();
        [s * phi.cos(), s * phi.sin(), x]
    }

    fn check(&self, idx: AngularIndex) -> Result<(), AngularError> {
        if idx.ell > self.ell_max {
            return Err(AngularError::IndexBeyondQuadrature { ell: idx.ell, ell_max: self.ell_max });
        }
        Ok(())
    }

    /// `Y_idx` at every quadrature point.
    pub fn harmonic(&self, idx: AngularIndex) -> Result<Vec<Real>, AngularError> {
        self.check(idx)?;
        let am = idx.m.unsigned_abs();
        let mut out = Vec::with_capacity(self.len());
        for &x in &self.cos_theta {
            let p = *legendre_column(am, idx.ell, x).last().unwrap();
            for &phi in &self.phi {
                out.push(match idx.m {
                    0 => p,
                    m if m > 0 => std::f64::consts::SQRT_2 * p * (m as Real * phi).cos(),
                    m => std::f64::consts::SQRT_2 * p * ((-m) as Real * phi).sin(),
                });
            }
        }
        Ok(out)
    }

    /// Gram matrix of all harmonics with `ell <= ell_max`, in [`AngularIndex::all_up_to`] order.
    pub fn gram_matrix(&self) -> Vec<Vec<Real>> {
        let ys: Vec<Vec<Real>> =
            AngularIndex::all_up_to(self.ell_max).into_iter().map(|i| self.harmonic(i).unwrap()).collect();
        ys.iter()
            .map(|a| ys.iter().map(|b| a.iter().zip(b).zip(&self.weights).map(|((x, y), w)| x * y * w).sum()).collect())
            .collect()
    }
}

/// Radial function sampled at the nodes of a panel set.
#[derive(Debug, Clone)]
pub struct RadialFunction {
    pub panels: PanelSet,
    pub values: Vec<Cplx>,
}

impl RadialFunction {
    pub fn from_fn<F: Fn(Real) -> Cplx>(panels: PanelSet, f: F) -> Self {
        let values = panels.nodes.iter().map(|&r| f(r)).collect();
        Self { panels, values }
    }

    /// Panel interpolant, zero outside the sampled interval.
    pub fn eval(&self, r: Real) -> Cplx {
        if r < self.panels.lo() || r > self.panels.hi() {
            return Cplx::new(0.0, 0.0);
        }
        self.panels.interpolate(&self.values, r)
    }

    /// `(int |g|^2 r^{d-1} dr)^{1/2}`.
    pub fn norm(&self, d: u32) -> Real {
        self.panels
            .nodes
            .iter()
            .zip(&self.panels.weights)
            .zip(&self.values)
            .map(|((r, w), v)| w * r.powi(d as i32 - 1) * v.norm_sqr())
            .sum::<Real>()
            .sqrt()
    }

    /// Weighted norm of `self - other`; both must share one panel set.
    pub fn sub_norm(&self, other: &Self, d: u32) -> Real {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        RadialFunction { panels: self.panels.clone(), values }.norm(d)
    }

    /// Largest nodal difference, relative to the larger sup norm.
    pub fn relative_difference(&self, other: &Self) -> Real {
        let scale = self.values.iter().chain(&other.values).map(|v| v.norm()).fold(0.0, Real::max);
        let diff = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, Real::max);
        if scale == 0.0 {
            0.0
        } else {
            diff / scale
        }
    }
}

/// Values on (radial nodes) x (sphere nodes), radius-major.
#[derive(Debug, Clone)]
pub struct GridFunction3D {
    pub radial: PanelSet,
    pub sphere: SphereQuadrature,
    pub values: Vec<Cplx>,
}

impl GridFunction3D {
    pub fn zeros(radial: PanelSet, sphere: SphereQuadrature) -> Self {
        let n = radial.len() * sphere.len();
        Self { radial, sphere, values: vec![Cplx::new(0.0, 0.0); n] }
    }

    pub fn from_fn<F: Fn([Real; 3]) -> Cplx>(radial: PanelSet, sphere: SphereQuadrature, f: F) -> Self {
        let mut values = Vec::with_capacity(radial.len() * sphere.len());
        for &r in &radial.nodes {
            for j in 0..sphere.len() {
                let w = sphere.direction(j);
                values.push(f([r * w[0], r * w[1], r * w[2]]));
            }
        }
        Self { radial, sphere, values }
    }

    /// `L^2(R^3)` norm by the product rule.
    pub fn norm(&self) -> Real {
        let ns = self.sphere.len();
        let mut acc = 0.0;
        for (i, (r, wr)) in self.radial.nodes.iter().zip(&self.radial.weights).enumerate() {
            let row: Real = self.values[i * ns..(i + 1) * ns]
                .iter()
                .zip(&self.sphere.weights)
                .map(|(v, w)| v.norm_sqr() * w)
                .sum();
            acc += wr * r * r * row;
        }
        acc.sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Self { values, ..self.clone() }
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.values.iter_mut().zip(&other.values).for_each(|(a, b)| *a += b);
    }

    /// Apply a map on nodal radial samples independently along every ray.
    pub fn map_rays<F: Fn(&[Cplx]) -> Vec<Cplx>>(&self, f: F) -> Self {
        let (nr, ns) = (self.radial.len(), self.sphere.len());
        let mut out = self.clone();
        let mut ray = vec![Cplx::new(0.0, 0.0); nr];
        for j in 0..ns {
            for i in 0..nr {
                ray[i] = self.values[i * ns + j];
            }
            let mapped = f(&ray);
            for i in 0..nr {
                out.values[i * ns + j] = mapped[i];
            }
        }
        out
    }
}

/// `[P f](r) = int_{S^2} f(r w) Y_idx(w) dsigma(w)`.
pub fn project(f: &GridFunction3D, idx: AngularIndex) -> Result<RadialFunction, AngularError> {
    let y = f.sphere.harmonic(idx)?;
    let ns = f.sphere.len();
    let wy: Vec<Real> = y.iter().zip(&f.sphere.weights).map(|(a, w)| a * w).collect();
    let values = (0..f.radial.len())
        .map(|i| f.values[i * ns..(i + 1) * ns].iter().zip(&wy).map(|(v, c)| v * c).sum())
        .collect();
    Ok(RadialFunction { panels: f.radial.clone(), values })
}

/// `[Q g](x) = g(|x|) Y_idx(x/|x|)` on the product grid.
pub fn embed(g: &RadialFunction, idx: AngularIndex, sphere: &SphereQuadrature) -> Result<GridFunction3D, AngularError> {
    let y = sphere.harmonic(idx)?;
    let values = g.values.iter().flat_map(|v| y.iter().map(move |c| v * c)).collect();
    Ok(GridFunction3D { radial: g.panels.clone(), sphere: sphere.clone(), values })
}

/// `sup` of per-`ell` operator norms, the bound on the full resolvent.
pub fn assemble_norm_bound(per_ell: &BTreeMap<u32, Real>) -> Result<Real, AngularError> {
    if per_ell.is_empty() {
        return Err(AngularError::EmptyScan);
    }
    Ok(per_ell.values().copied().fold(Real::NEG_INFINITY, Real::max))
}

/// Norm of a block-diagonal operator on `L^2(R^3)` against its blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDiagonalCheck {
    pub full: NormEstimate,
    pub per_ell: BTreeMap<u32, Real>,
    pub sup_blocks: Real,
}

impl BlockDiagonalCheck {
    pub fn holds(&self, slack: Real) -> bool {
        self.full.norm <= self.sup_blocks + slack
    }
}

/// Assemble `T = sum_{l,m} Q_{l,m} R_l P_{l,m}` on the product grid from
/// reduced resolvents sharing one panel set, and compare its Lanczos norm
/// with `sup_l ||R_l||`. Channels without an operator act as zero.
pub fn block_diagonal_check(
    ops: &[ResolventOperator],
    sphere: &SphereQuadrature,
    opts: &PowerOptions,
) -> Result<BlockDiagonalCheck, AngularError> {
    let first = ops.first().ok_or(AngularError::EmptyScan)?;
    let panels = &first.op.panels;
    if ops.iter().any(|o| o.op.panels.edges != panels.edges) {
        return Err(AngularError::MismatchedPanels);
    }
    let mut channels: Vec<(&ResolventOperator, Vec<Real>)> = vec![];
    let mut per_ell = BTreeMap::new();
    for op in ops {
        let ell = op.kernel.spectral.ell;
        per_ell.insert(ell, op.norm_estimate(opts)?.norm);
        for m in -(ell as i32)..=ell as i32 {
            let y = sphere.harmonic(AngularIndex::new(ell, m)?)?;
            // orthonormal vectors of the balanced sphere coordinates
            let e = y.iter().zip(&sphere.weights).map(|(a, w)| a * w.sqrt()).collect();
            channels.push((op, e));
        }
    }
    let (nr, ns) = (panels.len(), sphere.len());
    let apply = |x: &[Cplx], adjoint: bool| -> Vec<Cplx> {
        let mut out = vec![Cplx::new(0.0, 0.0); nr * ns];
        for (op, e) in &channels {
            let c: Vec<Cplx> =
                (0..nr).map(|i| x[i * ns..(i + 1) * ns].iter().zip(e).map(|(v, w)| v * w).sum()).collect();
            let mc = if adjoint { op.op.apply_balanced_adjoint(&c) } else { op.op.apply_balanced(&c) };
            for i in 0..nr {
                for j in 0..ns {
                    out[i * ns + j] += mc[i] * e[j];
                }
            }
        }
        out
    };
    let full = lanczos_norm(nr * ns, |x| apply(&apply(x, false), true), opts)?;
    let sup_blocks = assemble_norm_bound(&per_ell)?;
    Ok(BlockDiagonalCheck { full, per_ell, sup_blocks })
}

#[cfg(test)]
mod tests;
