//! Rescaled kernels of the 2m-th order heat semigroup and the generalized
//! Hermite eigenfunctions of the rescaled operators B and B*.

mod hermite;
mod kernel;

pub use hermite::{
    adjoint_polynomial, apply_adjoint_operator, biorthonormality_matrix, eigen_identity_holds, BiorthonormalityReport,
    HermitePair, RationalPoly,
};
pub use kernel::{
    build_kernel, envelope_bound, integrate_symmetric, integration_radius, kernel_asymptotic_fit, kernel_constants,
    kernel_tail_amplitudes, AsymptoticFit, KernelConstants, KernelModel, KernelTable, QuadMethod, QuadSettings,
    MAX_DERIV,
};

/// Residual of −F⁗ + (yF)′/4 = 0 (the m = 2 kernel equation) at `y`.
pub fn kernel_ode_residual(model: &KernelModel, y: f64) -> f64 {
    let d = model.derivs(y, 4);
    -d[4] + 0.25 * (y * d[1] + d[0])
}
