use log::debug;
use nalgebra::{Cholesky, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::laurent::{pow2_at_least, LaurentMatrix};
use super::sbr2::Sbr2Result;
use super::scalar::{max_root_modulus, scalar_spectral_factor, series_inverse};
use crate::error::{Error, Result};
use crate::linalg::{fft_matrices, ifft_matrices, psd_project, symmetrize, CMat, Mat};

/// Pole guard: poles with modulus `>= 1 - EPS_POLE` are rejected.
pub const EPS_POLE: f64 = 1e-3;
/// Truncation target for causal inverses: `ρ^n ≤ TRUNC_TARGET`.
pub const TRUNC_TARGET: f64 = 1e-8;
const MAX_TRUNC: usize = 1 << 20;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralFactor {
    /// Para-unitary factor from the polynomial EVD.
    pub h: LaurentMatrix,
    /// Causal minimum-phase scalar factors, one coefficient vector per diagonal entry.
    pub d: Vec<Vec<f64>>,
    /// `L = H~ D`, with `L L~ ≈ R`.
    pub l: LaurentMatrix,
    /// `‖R − L L~‖_F / ‖R‖_F`.
    pub residual: f64,
    /// Off-diagonal Frobenius mass of the diagonalised matrix relative to its total.
    pub offdiag_mass: f64,
    /// Largest `‖H H~ − I‖_F` on the circle grid.
    pub paraunitary_residual: f64,
    /// Largest zero modulus over the diagonal factors.
    pub max_root: f64,
    /// Causal minimum-phase (outer) factor on the same spectrum.
    pub outer: LaurentMatrix,
    pub outer_residual: f64,
    pub outer_iterations: usize,
    pub sbr2_iterations: usize,
    pub grid: usize,
}

/// Relative Frobenius residual of `R − L L~`, exact via Parseval on a large enough grid.
pub fn factor_residual(r: &LaurentMatrix, l: &LaurentMatrix) -> f64 {
    let n = pow2_at_least(r.len() + 2 * l.len() + 1);
    let rv = r.eval_on_circle(n);
    let lv = l.eval_on_circle(n);
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in rv.iter().zip(&lv) {
        num += (a - b * b.adjoint()).norm_squared();
        den += a.norm_squared();
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

pub fn paraunitary_residual(h: &LaurentMatrix, n_grid: usize) -> f64 {
    let d = h.nrows();
    let n = n_grid.max(pow2_at_least(h.len()));
    h.eval_on_circle(n)
        .iter()
        .map(|v| (v * v.adjoint() - CMat::identity(d, d)).norm())
        .fold(0.0, f64::max)
}

fn diagonal_laurent(d: &[Vec<f64>]) -> LaurentMatrix {
    let n = d.len();
    let len = d.iter().map(Vec::len).max().unwrap_or(1);
    let coeffs = (0..len)
        .map(|k| Mat::from_diagonal(&DVector::from_iterator(n, d.iter().map(|p| p.get(k).copied().unwrap_or(0.0)))))
        .collect();
    LaurentMatrix::new(0, coeffs)
}

pub fn assemble_factor(r: &LaurentMatrix, sbr: &Sbr2Result, n_grid: usize) -> Result<SpectralFactor> {
    if !sbr.converged {
        return Err(Error::Numerical(format!(
            "polynomial EVD did not converge after {} iterations",
            sbr.iterations
        )));
    }
    let g = &sbr.gamma;
    let dim = g.nrows();
    let m = g.order() as isize;
    let mut d = Vec::with_capacity(dim);
    let (mut off, mut tot) = (0.0, 0.0);
    for c in &g.coeffs {
        for i in 0..dim {
            for j in 0..dim {
                let v = c[(i, j)] * c[(i, j)];
                tot += v;
                if i != j {
                    off += v;
                }
            }
        }
    }
    for i in 0..dim {
        let a: Vec<f64> = (0..=m)
            .map(|k| 0.5 * (g.coeff(k)[(i, i)] + g.coeff(-k)[(i, i)]))
            .collect();
        let p = scalar_spectral_factor(&a, n_grid).map_err(|e| {
            Error::Numerical(format!("diagonal {i} failed scalar factorization: {e}"))
        })?;
        d.push(p);
    }
    let max_root = d.iter().map(|p| max_root_modulus(p)).fold(0.0, f64::max);
    let l = sbr.h.paraconj().mul(&diagonal_laurent(&d));
    let residual = factor_residual(r, &l);
    let pu = paraunitary_residual(&sbr.h, n_grid);
    let (outer, outer_residual, outer_iterations) = outer_factor(r, n_grid)?;
    debug!(
        "factor: residual {residual:.3e}, offdiag {:.3e}, outer residual {outer_residual:.3e}",
        if tot > 0.0 { (off / tot).sqrt() } else { 0.0 }
    );
    Ok(SpectralFactor {
        h: sbr.h.clone(),
        d,
        l,
        residual,
        offdiag_mass: if tot > 0.0 { (off / tot).sqrt() } else { 0.0 },
        paraunitary_residual: pu,
        max_root,
        outer,
        outer_residual,
        outer_iterations,
        sbr2_iterations: sbr.iterations,
        grid: n_grid,
    })
}

/// Causal minimum-phase factor `ψ` with `ψ ψ~ = R`, by Wilson's Newton iteration
/// on the circle grid, started from the Cholesky factor of the lag-zero coefficient.
/// Returns the factor coefficients, the final relative residual and the iteration count.
pub fn outer_factor(r: &LaurentMatrix, n_grid: usize) -> Result<(LaurentMatrix, f64, usize)> {
    let d = r.nrows();
    let n = n_grid.max(pow2_at_least(8 * (r.order() + 1)));
    let s = r.eval_on_circle(n);
    let s: Vec<CMat> = s.iter().map(|m| (m + m.adjoint()) * Complex64::new(0.5, 0.0)).collect();
    let snorm: f64 = s.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();
    if snorm == 0.0 {
        return Ok((LaurentMatrix::constant(Mat::zeros(d, d)), 0.0, 0));
    }
    let r0 = psd_project(&symmetrize(&r.coeff(0)));
    let chol = Cholesky::new(r0)
        .ok_or_else(|| Error::Singular("lag-zero covariance is not positive definite".into()))?;
    let start = chol.l().map(|x| Complex64::new(x, 0.0));
    let mut psi = vec![start; n];
    let ident = CMat::identity(d, d);
    let residual = |psi: &[CMat]| -> f64 {
        psi.iter()
            .zip(&s)
            .map(|(p, sv)| (p * p.adjoint() - sv).norm_squared())
            .sum::<f64>()
            .sqrt()
            / snorm
    };
    let mut res = residual(&psi);
    let mut iters = 0;
    while res > 1e-13 && iters < 100 {
        let mut g = Vec::with_capacity(n);
        for (p, sv) in psi.iter().zip(&s) {
            let inv = p
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::Singular("outer factor became singular on the grid".into()))?;
            g.push(&inv * sv * inv.adjoint() + &ident);
        }
        let mut lags = ifft_matrices(&g);
        lags[0] *= Complex64::new(0.5, 0.0);
        for l in lags.iter_mut().skip(n / 2) {
            l.fill(Complex64::new(0.0, 0.0));
        }
        let gp = fft_matrices(&lags, false);
        for (p, q) in psi.iter_mut().zip(&gp) {
            *p = &*p * q;
        }
        let next = residual(&psi);
        iters += 1;
        if !next.is_finite() {
            return Err(Error::Numerical("outer factorization diverged".into()));
        }
        if next >= res && next < 1e-10 {
            res = next;
            break;
        }
        res = next;
    }
    let mut coeffs = LaurentMatrix::from_circle(&psi, 0, n as isize / 2 - 1);
    coeffs.trim(1e-15);
    Ok((coeffs, res, iters))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InverseFactor {
    /// `L^{-1} = D^{-1} H`, with each scalar inverse truncated at `n_trunc` lags.
    pub coeffs: LaurentMatrix,
    pub n_trunc: usize,
    /// Largest pole modulus of the diagonal inverses.
    pub max_pole: f64,
    /// `Σ_{k ≥ n_trunc} |c_k|` of the worst diagonal inverse (measured to `2 n_trunc`,
    /// geometric beyond).
    pub tail_bound: f64,
}

/// Truncated inverse of `L = H~ D`. Poles of `1/d_i` come from companion-matrix
/// roots and drive the guard and truncation length; coefficients use series division.
pub fn invert_factor(f: &SpectralFactor) -> Result<InverseFactor> {
    let rho = f.d.iter().map(|p| max_root_modulus(p)).fold(0.0, f64::max);
    if rho >= 1.0 - EPS_POLE {
        return Err(Error::Numerical(format!(
            "pole modulus {rho:.6} is within {EPS_POLE} of the unit circle"
        )));
    }
    let order = f.d.iter().map(Vec::len).max().unwrap_or(1);
    let n_trunc = if rho > 0.0 {
        ((TRUNC_TARGET.ln() / rho.ln()).ceil() as usize).max(order).min(MAX_TRUNC)
    } else {
        order
    };
    let mut inv = Vec::with_capacity(f.d.len());
    let mut tail: f64 = 0.0;
    for p in &f.d {
        // the discarded mass is measured on a doubled expansion plus a geometric remainder
        let mut y = series_inverse(p, 2 * n_trunc)?;
        let beyond: f64 = y[n_trunc..].iter().map(|v| v.abs()).sum();
        let last = y.last().map_or(0.0, |v| v.abs());
        let remainder = if rho > 0.0 { last * rho / (1.0 - rho) } else { 0.0 };
        tail = tail.max(beyond + remainder);
        y.truncate(n_trunc);
        inv.push(y);
    }
    let dinv = diagonal_laurent(&inv);
    let coeffs = dinv.mul(&f.h);
    Ok(InverseFactor { coeffs, n_trunc, max_pole: rho, tail_bound: tail })
}

/// Largest `‖A(ω) B(ω) − I‖_F` over an `n`-point grid.
pub fn identity_residual(a: &LaurentMatrix, b: &LaurentMatrix, n: usize) -> f64 {
    let d = a.nrows();
    a.eval_on_circle(n)
        .iter()
        .zip(b.eval_on_circle(n))
        .map(|(x, y)| (x * y - CMat::identity(d, d)).norm())
        .fold(0.0, f64::max)
}
