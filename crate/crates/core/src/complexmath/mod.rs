//! Branch-correct complex elementary functions, half-integer Bessel functions
//! and quadrature. Everything here is generic over the real scalar.

mod bessel;
mod error;
mod quadrature;
mod scaled;
mod sqrt;

pub use bessel::{
    half_integer_bessel, half_integer_bessel_derivative, half_integer_bessel_scaled,
    half_integer_bessel_scaled_pair, half_integer_index, hankel_polynomial, BesselKind,
};
pub use error::MathError;
pub use quadrature::{
    adaptive_quad, adaptive_quad_depth, adaptive_quad_semi_infinite, gauss_legendre_reference,
    GaussPanel, QuadResult, QuadratureRule, DEFAULT_MAX_DEPTH,
};
pub use scaled::Scaled;
pub use sqrt::{principal_sqrt, sqrt_off_cut};
