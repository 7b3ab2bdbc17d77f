//! Special functions, adaptive quadrature and monotone root finding.
//!
//! Everything here is a pure function of its arguments and can be called
//! concurrently without restriction.

pub mod bessel;
pub mod gaussian;
pub mod hyper;
pub mod marcum;
pub mod quad;
pub mod root;

pub use bessel::{bessel_i0, bessel_i0_scaled, bessel_i_scaled_seq};
pub use gaussian::{gaussian_pdf, gaussian_q, gaussian_q_inverse};
pub use hyper::gauss_2f1;
pub use marcum::{marcum_p1, marcum_q1};
pub use quad::{integrate, integrate_with_breaks, Domain, QuadratureSpec};
pub use root::{solve_monotone, solve_monotone_with, Direction, RootBracket, RootOptions};
