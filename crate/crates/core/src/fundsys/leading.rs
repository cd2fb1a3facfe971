//! Leading-order solutions `L` of `L'' = U L` for each regime, and the
//! perturbation `P = q - U` left on the right-hand side, where
//! `q = r^2 + (nu^2 - 1/4)/r^2 + mu - V`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::complexmath::{
    gauss_legendre_reference, half_integer_bessel_scaled_pair, sqrt_off_cut, BesselKind, Scaled,
};
use crate::phase::{bessel_potential_qtilde, lg_potential_Q, SpectralPoint};
use crate::{Cplx, Real, ScaledC};

use super::RadialPotential;

pub trait LeadingOrder: Send + Sync {
    fn value(&self, r: Real) -> ScaledC;
    /// `L'/L`.
    fn log_derivative(&self, r: Real) -> Cplx;
    /// `q - L''/L`.
    fn perturbation(&self, r: Real) -> Cplx;
}

/// Full normal-form coefficient `q(r)`.
pub fn normal_form_q(p: &SpectralPoint, v: &RadialPotential, r: Real) -> Cplx {
    p.mu + r * r + (p.nu * p.nu - 0.25) / (r * r) - v.eval(r)
}

/// Cumulative table of `Phi(r) = int_1^r p(s) ds` on a set of knots.
#[derive(Debug, Clone)]
pub struct PhaseTable {
    p: SpectralPoint,
    knots: Vec<Real>,
    /// `int_1^{knot} (p(s) - s) ds`.
    excess: Vec<Cplx>,
    gl: (Vec<Real>, Vec<Real>),
}

impl PhaseTable {
    /// `knots` must be increasing and contain 1.
    pub fn new(p: &SpectralPoint, knots: &[Real]) -> Self {
        let gl = gauss_legendre_reference(24);
        let mut table = Self { p: *p, knots: knots.to_vec(), excess: vec![], gl };
        let one = knots.iter().position(|&k| k == 1.0).expect("phase table needs the knot 1");
        let mut excess = vec![Cplx::new(0.0, 0.0); knots.len()];
        for i in one + 1..knots.len() {
            excess[i] = excess[i - 1] + table.segment(knots[i - 1], knots[i]);
        }
        for i in (0..one).rev() {
            excess[i] = excess[i + 1] + table.segment(knots[i + 1], knots[i]);
        }
        table.excess = excess;
        table
    }

    fn integrand(&self, s: Real) -> Cplx {
        let p = &self.p;
        (p.mu + p.nu * p.nu / (s * s)) / (p.lg_momentum(s) + s)
    }

    fn segment(&self, a: Real, b: Real) -> Cplx {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.gl
            .0
            .iter()
            .zip(&self.gl.1)
            .map(|(t, w)| self.integrand(mid + half * t) * (half * w))
            .sum()
    }

    pub fn phi(&self, r: Real) -> Cplx {
        let k = match self.knots.binary_search_by(|x| x.total_cmp(&r)) {
            Ok(i) => return Cplx::new(0.5 * (r * r - 1.0), 0.0) + self.excess[i],
            Err(i) => {
                if i == 0 {
                    0
                } else if i == self.knots.len() {
                    i - 1
                } else if r - self.knots[i - 1] <= self.knots[i] - r {
                    i - 1
                } else {
                    i
                }
            }
        };
        Cplx::new(0.5 * (r * r - 1.0), 0.0) + self.excess[k] + self.segment(self.knots[k], r)
    }
}

/// `L_-+ = p^{-1/2} e^{-+Phi} / sqrt 2` for `r >= 1`.
pub struct WeberLead {
    pub p: SpectralPoint,
    pub v: RadialPotential,
    pub sign: Real,
    pub table: std::sync::Arc<PhaseTable>,
}

impl LeadingOrder for WeberLead {
    fn value(&self, r: Real) -> ScaledC {
        let pr = self.p.lg_momentum(r);
        Scaled::exp(self.table.phi(r) * self.sign) * (sqrt_off_cut(pr).inv() * FRAC_1_SQRT_2)
    }

    fn log_derivative(&self, r: Real) -> Cplx {
        let pr = self.p.lg_momentum(r);
        let dp = (r - self.p.nu * self.p.nu / (r * r * r)) / pr;
        pr * self.sign - dp / (2.0 * pr)
    }

    fn perturbation(&self, r: Real) -> Cplx {
        lg_potential_Q(&self.p, r) - 0.25 / (r * r) - self.v.eval(r)
    }
}

/// `psi_+- = p^^{-1/2} e^{+-nu zeta(alpha r)} / sqrt 2`, `p^ = sqrt(mu + nu^2/r^2)`.
pub struct LargeNuLead {
    pub p: SpectralPoint,
    pub v: RadialPotential,
    pub sign: Real,
    alpha: Cplx,
    zeta_at_alpha: Cplx,
}

impl LargeNuLead {
    pub fn new(p: &SpectralPoint, v: &RadialPotential, sign: Real) -> Self {
        let alpha = p.alpha.expect("large-nu leading order needs nu >= 1");
        let mut lead = Self { p: *p, v: *v, sign, alpha, zeta_at_alpha: Cplx::new(0.0, 0.0) };
        lead.zeta_at_alpha = lead.raw_zeta(alpha);
        lead
    }

    fn raw_zeta(&self, x: Cplx) -> Cplx {
        let root = sqrt_off_cut(1.0 + x * x);
        root + (x / (1.0 + root)).ln()
    }

    fn momentum(&self, r: Real) -> Cplx {
        sqrt_off_cut(self.p.mu + self.p.nu * self.p.nu / (r * r))
    }

    /// `nu zeta(alpha r)`.
    pub fn exponent(&self, r: Real) -> Cplx {
        (self.raw_zeta(self.alpha * r) - self.zeta_at_alpha) * self.p.nu
    }
}

impl LeadingOrder for LargeNuLead {
    fn value(&self, r: Real) -> ScaledC {
        Scaled::exp(self.exponent(r) * self.sign) * (sqrt_off_cut(self.momentum(r)).inv() * FRAC_1_SQRT_2)
    }

    fn log_derivative(&self, r: Real) -> Cplx {
        let pr = self.momentum(r);
        let dp = -self.p.nu * self.p.nu / (r * r * r) / pr;
        pr * self.sign - dp / (2.0 * pr)
    }

    fn perturbation(&self, r: Real) -> Cplx {
        let q = bessel_potential_qtilde(&self.p, r).expect("nu >= 1 checked at construction");
        r * r + q - self.v.eval(r)
    }
}

/// `sqrt(r) Z_nu(i mu^{1/2} r)`.
pub struct BesselLead {
    pub p: SpectralPoint,
    pub v: RadialPotential,
    pub kind: BesselKind,
    k: Cplx,
}

impl BesselLead {
    pub fn new(p: &SpectralPoint, v: &RadialPotential, kind: BesselKind) -> Self {
        crate::complexmath::half_integer_index(p.nu).expect("odd dimension gives half-integer order");
        Self { p: *p, v: *v, kind, k: Cplx::i() * p.sqrt_mu() }
    }

    fn pair(&self, r: Real) -> (ScaledC, ScaledC) {
        half_integer_bessel_scaled_pair(self.kind, self.p.nu, self.k * r)
            .expect("argument i mu^(1/2) r lies off the cut")
    }
}

impl LeadingOrder for BesselLead {
    fn value(&self, r: Real) -> ScaledC {
        self.pair(r).0 * Cplx::new(r.sqrt(), 0.0)
    }

    fn log_derivative(&self, r: Real) -> Cplx {
        let (z, dz) = self.pair(r);
        0.5 / r + self.k * (dz / z).to_complex()
    }

    fn perturbation(&self, r: Real) -> Cplx {
        Cplx::new(r * r, 0.0) - self.v.eval(r)
    }
}

/// `W(sqrt r J, sqrt r H+)`.
pub const W_J_HPLUS: Cplx = Cplx::new(0.0, 2.0 / PI);
/// `W(sqrt r J, sqrt r Y)`.
pub const W_J_Y: Cplx = Cplx::new(2.0 / PI, 0.0);
/// `W(sqrt r H+, sqrt r H-)`.
pub const W_HPLUS_HMINUS: Cplx = Cplx::new(0.0, -4.0 / PI);
