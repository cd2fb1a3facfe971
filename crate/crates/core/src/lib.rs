//! Reduced resolvents of radially perturbed Ornstein-Uhlenbeck operators,
//! built regime by regime from Liouville-Green and Bessel leading orders.

pub mod angular;
pub mod complexmath;
pub mod fundsys;
pub mod phase;
pub mod resolvent;
pub mod semigroup;

use num_complex::Complex;

/// Real scalar used by the solver layers.
pub type Real = f64;
/// Complex scalar used by the solver layers.
pub type Cplx = Complex<f64>;
/// Overflow-free complex scalar at `f64` precision.
pub type ScaledC = complexmath::Scaled<f64>;
