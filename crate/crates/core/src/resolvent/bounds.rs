//! Certificates for the pointwise Green kernel bound
//! `omega^{-1/2} <omega^{-1/2} r>^{-1/2 + b/2} <omega^{-1/2} s>^{-1/2 - b/2}`
//! (`r <= s`, transposed for `r >= s`), split by regime cell.

use crate::{Real, ScaledC};

use super::{Branch, GreenKernel};

/// The kernel bound at `(r, s)`.
pub fn kernel_bound(omega: Real, b: Real, r: Real, s: Real) -> Real {
    let bracket = |x: Real| (1.0 + x * x / omega).sqrt();
    // both orderings put the exponent -1/2 + b/2 on the smaller argument
    let (near, far) = if r <= s { (r, s) } else { (s, r) };
    omega.powf(-0.5) * bracket(near).powf(-0.5 + 0.5 * b) * bracket(far).powf(-0.5 - 0.5 * b)
}

/// Unordered pair of regimes that `(r, s)` falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellKind {
    BesselBessel,
    BesselHankel,
    BesselWeber,
    HankelHankel,
    HankelWeber,
    WeberWeber,
}

impl CellKind {
    pub const ALL: [CellKind; 6] = [
        Self::BesselBessel,
        Self::BesselHankel,
        Self::BesselWeber,
        Self::HankelHankel,
        Self::HankelWeber,
        Self::WeberWeber,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::BesselBessel => "Bessel-Bessel",
            Self::BesselHankel => "Bessel-Hankel",
            Self::BesselWeber => "Bessel-Weber",
            Self::HankelHankel => "Hankel-Hankel",
            Self::HankelWeber => "Hankel-Weber",
            Self::WeberWeber => "Weber-Weber",
        }
    }

    /// Cell of `(r, s)` when the Bessel/Hankel split sits at `split`.
    pub fn of(split: Real, r: Real, s: Real) -> Self {
        let zone = |x: Real| if x < split.min(1.0) { 0 } else if x < 1.0 { 1 } else { 2 };
        match (zone(r).min(zone(s)), zone(r).max(zone(s))) {
            (0, 0) => Self::BesselBessel,
            (0, 1) => Self::BesselHankel,
            (0, _) => Self::BesselWeber,
            (1, 1) => Self::HankelHankel,
            (1, _) => Self::HankelWeber,
            _ => Self::WeberWeber,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSummary {
    pub kind: CellKind,
    pub count: usize,
    /// `sup |G| / bound` over the cell; zero when the cell is empty.
    pub sup: Real,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCertificate {
    pub branch: Branch,
    pub r_lo: Real,
    pub r_hi: Real,
    pub points: usize,
    pub measured_sup: Real,
    pub formula: &'static str,
    pub breakdown: Vec<CellSummary>,
}

impl BoundCertificate {
    /// Every regime cell received at least one sample.
    pub fn populated(&self) -> bool {
        self.breakdown.iter().all(|c| c.count > 0)
    }

    pub fn cell(&self, kind: CellKind) -> &CellSummary {
        self.breakdown.iter().find(|c| c.kind == kind).expect("all kinds present")
    }
}

pub const BOUND_FORMULA: &str = "omega^-1/2 <omega^-1/2 r_<>^(-1/2+b/2) <omega^-1/2 r_>>^(-1/2-b/2)";

/// `n` radii, log-spaced from a tenth of the Bessel/Hankel split to `r_max`,
/// so that every regime is sampled.
pub fn bound_grid(k: &GreenKernel, n: usize) -> Vec<Real> {
    let lo = (0.1 * k.split.min(1.0)).max(k.r_min);
    crate::phase::log_grid(lo, k.r_max, n)
}

/// `sup |G(r,s)| / bound(r,s)` over the product grid `radii x radii`.
pub fn verify_kernel_bound(k: &GreenKernel, radii: &[Real]) -> BoundCertificate {
    let p = k.spectral;
    let v0: Vec<ScaledC> = radii.iter().map(|&r| k.v0.eval(r).0).collect();
    let vm: Vec<ScaledC> = radii.iter().map(|&r| k.v_minus.eval(r).0).collect();
    let mut breakdown: Vec<CellSummary> =
        CellKind::ALL.iter().map(|&kind| CellSummary { kind, count: 0, sup: 0.0 }).collect();
    for (i, &r) in radii.iter().enumerate() {
        for (j, &s) in radii.iter().enumerate() {
            let (lo, hi) = if r <= s { (i, j) } else { (j, i) };
            let g = k.eval_with(r, s, v0[lo], vm[hi]).abs();
            let ratio = g / kernel_bound(p.omega, p.b, r, s);
            let cell = &mut breakdown[CellKind::of(k.split, r, s) as usize];
            cell.count += 1;
            cell.sup = cell.sup.max(ratio);
        }
    }
    let measured_sup = breakdown.iter().map(|c| c.sup).fold(0.0, Real::max);
    BoundCertificate {
        branch: k.branch,
        r_lo: radii.first().copied().unwrap_or(0.0),
        r_hi: radii.last().copied().unwrap_or(0.0),
        points: radii.len(),
        measured_sup,
        formula: BOUND_FORMULA,
        breakdown,
    }
}
