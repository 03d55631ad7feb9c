//! Laurent polynomial matrices and spectral factorization.

mod factor;
mod laurent;
mod sbr2;
mod scalar;

pub use factor::{
    assemble_factor, factor_residual, identity_residual, invert_factor, outer_factor,
    paraunitary_residual, InverseFactor, SpectralFactor, EPS_POLE, TRUNC_TARGET,
};
pub use laurent::{pow2_at_least, LaurentMatrix};
pub use sbr2::{sbr2_pevd, Sbr2Result, TRIM_REL};
pub use scalar::{
    causal_roots, max_root_modulus, partial_fraction_inverse, scalar_spectral_factor,
    series_inverse,
};

use crate::error::Result;
use crate::linalg::CMat;

/// Samples at `ω_k = 2πk/n`.
pub fn eval_on_circle(m: &LaurentMatrix, n_grid: usize) -> Vec<CMat> {
    m.eval_on_circle(n_grid)
}

/// Full factorization: SBR2, diagonal factors, outer factor, residuals.
pub fn factorize(r: &LaurentMatrix, tol: f64, max_iter: usize, n_grid: usize) -> Result<SpectralFactor> {
    let sbr = sbr2_pevd(r, tol, max_iter)?;
    assemble_factor(r, &sbr, n_grid)
}
