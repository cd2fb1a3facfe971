use crate::{Cplx, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialKind {
    Zero,
    /// `A / (1 + r^2)`.
    InverseSquareDecay,
    /// `A e^{i theta} / (1 + r^2)`.
    ComplexScaled,
    /// `A e^{-r^2}`.
    Bump,
}

impl PotentialKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::InverseSquareDecay => "inverse_square_decay",
            Self::ComplexScaled => "complex_scaled",
            Self::Bump => "bump",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "zero" => Some(Self::Zero),
            "inverse_square_decay" => Some(Self::InverseSquareDecay),
            "complex_scaled" => Some(Self::ComplexScaled),
            "bump" => Some(Self::Bump),
            _ => None,
        }
    }
}

/// Radial potential with `|V| <= C <r>^{-2}` and `|V'| <= C <r>^{-3}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialPotential {
    pub kind: PotentialKind,
    pub amplitude: Real,
    pub phase: Real,
}

impl RadialPotential {
    pub fn zero() -> Self {
        Self { kind: PotentialKind::Zero, amplitude: 0.0, phase: 0.0 }
    }

    pub fn inverse_square(amplitude: Real) -> Self {
        Self { kind: PotentialKind::InverseSquareDecay, amplitude, phase: 0.0 }
    }

    pub fn complex_scaled(amplitude: Real, phase: Real) -> Self {
        Self { kind: PotentialKind::ComplexScaled, amplitude, phase }
    }

    pub fn bump(amplitude: Real) -> Self {
        Self { kind: PotentialKind::Bump, amplitude, phase: 0.0 }
    }

    fn coefficient(&self) -> Cplx {
        match self.kind {
            PotentialKind::Zero => Cplx::new(0.0, 0.0),
            PotentialKind::ComplexScaled => Cplx::from_polar(self.amplitude, self.phase),
            _ => Cplx::new(self.amplitude, 0.0),
        }
    }

    /// True when `V` vanishes identically.
    pub fn is_zero(&self) -> bool {
        self.coefficient() == Cplx::new(0.0, 0.0)
    }

    pub fn eval(&self, r: Real) -> Cplx {
        let a = self.coefficient();
        match self.kind {
            PotentialKind::Zero => a,
            PotentialKind::InverseSquareDecay | PotentialKind::ComplexScaled => a / (1.0 + r * r),
            PotentialKind::Bump => a * (-r * r).exp(),
        }
    }

    pub fn eval_deriv(&self, r: Real) -> Cplx {
        let a = self.coefficient();
        match self.kind {
            PotentialKind::Zero => a,
            PotentialKind::InverseSquareDecay | PotentialKind::ComplexScaled => {
                a * (-2.0 * r / (1.0 + r * r).powi(2))
            }
            PotentialKind::Bump => a * (-2.0 * r * (-r * r).exp()),
        }
    }

    /// A constant `C` valid for both decay bounds.
    ///
    /// `2 r <r>^{-1} <= 2` for the inverse-square family and
    /// `sup 2 r e^{-r^2} <r>^3 < 2.2` for the bump.
    pub fn decay_constant(&self) -> Real {
        let factor = match self.kind {
            PotentialKind::Bump => 2.2,
            _ => 2.0,
        };
        factor * self.coefficient().norm()
    }

    /// `max |V| <r>^2` and `max |V'| <r>^3` over the given radii.
    pub fn measured_decay(&self, rs: &[Real]) -> (Real, Real) {
        rs.iter().fold((0.0, 0.0), |(a, b), &r| {
            let w = 1.0 + r * r;
            (a.max(self.eval(r).norm() * w), b.max(self.eval_deriv(r).norm() * w.powf(1.5)))
        })
    }
}
