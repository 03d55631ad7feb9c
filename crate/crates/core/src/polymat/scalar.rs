//! Scalar minimum-phase factorization and causal inversion.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{fft_scalar, poly_roots};

/// Tolerance for negative values of the spectrum on the circle, relative to its peak.
pub const NEG_TOL: f64 = 1e-9;

/// Minimum-phase `p` with `p(z) p(1/z) = a(z)`, where `a` holds the symmetric
/// coefficients `a_0, a_1, ..., a_m` (lag `k` and `-k` share `a_k`). Returns
/// `p_0 .. p_m` (`p(z) = Σ p_k z^{-k}`), `p_0 > 0`.
///
/// Cepstral method on an `n`-point grid: `log a(ω)` is split into its causal part,
/// exponentiated, and truncated to the order of `a`.
pub fn scalar_spectral_factor(a: &[f64], n_grid: usize) -> Result<Vec<f64>> {
    if a.is_empty() {
        return Err(Error::InvalidInput("empty autocorrelation".into()));
    }
    let m = a.len() - 1;
    let n = n_grid.max(16 * (m + 1)).next_power_of_two();
    let mut seq = vec![Complex64::new(0.0, 0.0); n];
    seq[0] = Complex64::new(a[0], 0.0);
    for k in 1..=m {
        seq[k] = Complex64::new(a[k], 0.0);
        seq[n - k] = Complex64::new(a[k], 0.0);
    }
    let spec: Vec<f64> = fft_scalar(&seq, false).iter().map(|z| z.re).collect();
    let peak = spec.iter().fold(0.0_f64, |x, &y| x.max(y.abs()));
    if peak == 0.0 {
        return Ok(vec![0.0; m + 1]);
    }
    let lo = spec.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo < -NEG_TOL * peak {
        return Err(Error::NotPsd(format!(
            "scalar spectrum dips to {lo:.3e} (peak {peak:.3e})"
        )));
    }
    let floor = peak * 1e-300_f64.max(f64::EPSILON * f64::EPSILON);
    let logs: Vec<Complex64> = spec.iter().map(|&s| Complex64::new(s.max(floor).ln(), 0.0)).collect();
    let cep = fft_scalar(&logs, true);
    let mut half = vec![Complex64::new(0.0, 0.0); n];
    half[0] = cep[0] * 0.5;
    for k in 1..n / 2 {
        half[k] = cep[k];
    }
    half[n / 2] = cep[n / 2] * 0.5;
    let expo: Vec<Complex64> = fft_scalar(&half, false).iter().map(|z| z.exp()).collect();
    let p = fft_scalar(&expo, true);
    Ok(p.iter().take(m + 1).map(|z| z.re).collect())
}

/// Zeros of `p(z) = Σ p_k z^{-k}` in the `z` plane, i.e. roots of `Σ p_k z^{m-k}`.
pub fn causal_roots(p: &[f64]) -> Vec<Complex64> {
    let mut end = p.len();
    while end > 1 && p[end - 1] == 0.0 {
        end -= 1;
    }
    poly_roots(&p[..end])
}

pub fn max_root_modulus(p: &[f64]) -> f64 {
    causal_roots(p).iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// First `n` impulse-response coefficients of `1/p(z)` by recursive series division.
pub fn series_inverse(p: &[f64], n: usize) -> Result<Vec<f64>> {
    let p0 = *p.first().ok_or_else(|| Error::InvalidInput("empty polynomial".into()))?;
    if p0 == 0.0 {
        return Err(Error::Singular("leading coefficient is zero".into()));
    }
    let mut y = vec![0.0; n];
    for t in 0..n {
        let mut acc = if t == 0 { 1.0 } else { 0.0 };
        for k in 1..p.len().min(t + 1) {
            acc -= p[k] * y[t - k];
        }
        y[t] = acc / p0;
    }
    Ok(y)
}

/// Impulse response of `1/p(z)` from its pole decomposition
/// `Σ_i r_i / (1 − z_i z^{-1})`. Assumes distinct poles.
pub fn partial_fraction_inverse(p: &[f64], n: usize) -> Result<Vec<f64>> {
    let p0 = *p.first().ok_or_else(|| Error::InvalidInput("empty polynomial".into()))?;
    let poles = causal_roots(p);
    if poles.is_empty() {
        let mut y = vec![0.0; n];
        if n > 0 {
            y[0] = 1.0 / p0;
        }
        return Ok(y);
    }
    let residues: Vec<Complex64> = poles
        .iter()
        .enumerate()
        .map(|(i, zi)| {
            let prod = poles
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .fold(Complex64::new(1.0, 0.0), |acc, (_, zj)| acc * (1.0 - zj / zi));
            1.0 / (prod * p0)
        })
        .collect();
    if residues.iter().any(|r| !r.is_finite()) {
        return Err(Error::Numerical("repeated poles in partial fraction expansion".into()));
    }
    Ok((0..n)
        .map(|t| {
            poles
                .iter()
                .zip(&residues)
                .map(|(z, r)| r * z.powu(t as u32))
                .sum::<Complex64>()
                .re
        })
        .collect())
}
