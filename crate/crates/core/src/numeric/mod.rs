//! Generic numerical building blocks: an embedded Runge-Kutta integrator and
//! adaptive Gauss-Kronrod quadrature for vector-valued integrands.

pub mod ode;
pub mod quad;

pub use ode::{integrate, integrate_fixed, integrate_grid, OdeOptions};
pub use quad::{integrate_vec, integrate_scalar, QuadOptions};
