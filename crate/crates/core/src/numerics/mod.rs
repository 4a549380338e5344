//! Small numerical kernels used across the laboratory: Gauss quadrature,
//! banded solvers, least-squares fits and an embedded Runge-Kutta stepper.

pub mod fit;
pub mod linalg;
pub mod ode;
pub mod quad;
pub mod tail;
