//! Boundary matrices, the martingale-admissible kernel K¹ and its clipped projection K².

use log::warn;
use nalgebra::Cholesky;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    clip_hermitian, fft_matrices, herm_max_abs_eig, herm_min_eig, ifft_matrices, min_eig_sym,
    psd_sqrt, real_part, sym_eigen, symmetrize, to_complex, CMat, Mat,
};
use crate::observables::ObservableSet;
use crate::polymat::{pow2_at_least, SpectralFactor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    K1,
    K2,
    Custom,
}

/// Matrix kernel sampled at lags `τΔ`, `τ = 0..=tau_max`, extended by `lambda` beyond.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactKernel {
    pub delta: f64,
    pub values: Vec<Mat>,
    pub k0: Mat,
    pub lambda: Mat,
    pub provenance: Provenance,
    /// Circle grid used for spectral checks and clipping.
    pub grid: usize,
}

impl ImpactKernel {
    pub fn d(&self) -> usize {
        self.k0.nrows()
    }

    pub fn tau_max(&self) -> usize {
        self.values.len() - 1
    }

    /// Lattice value at lag `k`, `Λ` past the last stored lag.
    pub fn lag(&self, k: usize) -> &Mat {
        self.values.get(k).unwrap_or(&self.lambda)
    }

    /// Piecewise-linear interpolation in continuous time, reaching `Λ` one lag
    /// after the last stored value.
    pub fn at(&self, t: f64) -> Mat {
        if t <= 0.0 {
            return self.values[0].clone();
        }
        let x = t / self.delta;
        let k = x.floor() as usize;
        let w = x - k as f64;
        if k > self.tau_max() {
            return self.lambda.clone();
        }
        self.lag(k) * (1.0 - w) + self.lag(k + 1) * w
    }

    /// Constant kernel `K(τ) = m`.
    pub fn constant(m: Mat, delta: f64, tau_max: usize) -> Self {
        ImpactKernel {
            delta,
            values: vec![m.clone(); tau_max + 1],
            k0: m.clone(),
            lambda: m,
            provenance: Provenance::Custom,
            grid: crate::DEFAULT_GRID,
        }
    }

    /// Kernel from explicit lag values and permanent matrix.
    pub fn from_values(values: Vec<Mat>, lambda: Mat, delta: f64) -> Self {
        ImpactKernel {
            delta,
            k0: values[0].clone(),
            values,
            lambda,
            provenance: Provenance::Custom,
            grid: crate::DEFAULT_GRID,
        }
    }

    /// Grid large enough to hold the kernel's two-sided lag sequence without aliasing.
    pub fn spectral_grid(&self) -> usize {
        self.grid.max(pow2_at_least(2 * self.tau_max()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factorization {
    Cholesky,
    SymmetricSqrt,
}

/// Symmetric PSD `M` with `M c M = ½Σ`.
pub fn kyle_matrix(sigma: &Mat, c: &Mat) -> Result<Mat> {
    kyle_matrix_with(sigma, c, Factorization::Cholesky)
}

/// `M = (1/√2) L^{-T} √(L^T Σ L) L^{-1}` with `L L^T = c` from the chosen factorization.
pub fn kyle_matrix_with(sigma: &Mat, c: &Mat, how: Factorization) -> Result<Mat> {
    let d = sigma.nrows();
    if sigma.shape() != (d, d) || c.shape() != (d, d) {
        return Err(Error::InvalidInput("Kyle inputs must be square and of equal size".into()));
    }
    let c = symmetrize(c);
    let l = match how {
        Factorization::Cholesky => Cholesky::new(c.clone())
            .ok_or_else(|| Error::NotPsd("conditioning matrix is not positive definite".into()))?
            .l(),
        Factorization::SymmetricSqrt => {
            let (vals, _) = sym_eigen(&c);
            if vals[0] <= 0.0 {
                return Err(Error::NotPsd("conditioning matrix is not positive definite".into()));
            }
            psd_sqrt(&c, 0.0)?
        }
    };
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("conditioning factor is singular".into()))?;
    let inner = psd_sqrt(&(l.transpose() * symmetrize(sigma) * &l), 1e-10)?;
    let m = l_inv.transpose() * inner * l_inv / std::f64::consts::SQRT_2;
    Ok(symmetrize(&m))
}

pub fn compute_k0(obs: &ObservableSet) -> Result<Mat> {
    kyle_matrix(&obs.sigma, &obs.omega_zero)
}

pub fn compute_lambda(obs: &ObservableSet) -> Result<Mat> {
    kyle_matrix(&obs.sigma, &obs.omega_inf)
}

/// Relative Frobenius gap between `Ω(0)` and `2 diag(θ v²) Δ`.
pub fn omega_zero_gap(obs: &ObservableSet, theta: &[f64], sizes: &[f64]) -> f64 {
    let d = obs.d();
    let atom = Mat::from_fn(d, d, |i, j| {
        if i == j {
            2.0 * theta[i] * sizes[i] * sizes[i] * obs.delta
        } else {
            0.0
        }
    });
    (&obs.omega_zero - &atom).norm() / atom.norm().max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct K1Diagnostics {
    pub factor_residual: f64,
    pub outer_residual: f64,
    /// Mass of the inverse transform at negative lags relative to the total.
    pub anticausal_leakage: f64,
    /// `‖K(τ_max) − Λ‖_F / ‖Λ‖_F`.
    pub tail_mismatch: f64,
    /// `‖O O^T − I‖_F` for `O = G^{-1} M`, `G` the Cholesky factor of `Λ Ω∞ Λ^T`.
    pub rotation_residual: f64,
    pub rotation_condition: f64,
}

/// K¹ from the outer factor `L`: the lag transform of `g(ω) = Λ L(0) L(ω)^{-1}` is
/// accumulated (exclusive cumulative sum) so that `K(0)` comes from the Kyle matrix
/// and `K(τ) = Σ_{k<τ} g_k` for `τ ≥ 1`, which tends to `Λ = g(ω=0)`.
pub fn build_k1(
    obs: &ObservableSet,
    factor: &SpectralFactor,
    n_grid: usize,
    tail_tol: f64,
) -> Result<(ImpactKernel, K1Diagnostics)> {
    let d = obs.d();
    let tau_max = obs.tau_max();
    let k0 = compute_k0(obs)?;
    let lambda = compute_lambda(obs)?;
    let n = n_grid.max(pow2_at_least(2 * (tau_max + 1)));
    let psi = factor.outer.eval_on_circle(n);
    let m = to_complex(&lambda) * &psi[0];
    let g_hat = psi
        .par_iter()
        .map(|p| {
            p.clone()
                .try_inverse()
                .map(|inv| &m * inv)
                .ok_or_else(|| Error::Singular("spectral factor is singular on the grid".into()))
        })
        .collect::<Result<Vec<CMat>>>()?;
    let g = ifft_matrices(&g_hat);
    let (mut causal, mut anti) = (0.0, 0.0);
    for (k, gk) in g.iter().enumerate() {
        if k < n / 2 {
            causal += gk.norm();
        } else {
            anti += gk.norm();
        }
    }
    let mut values = Vec::with_capacity(tau_max + 1);
    values.push(k0.clone());
    let mut acc = Mat::zeros(d, d);
    for gk in g.iter().take(tau_max) {
        acc += real_part(gk);
        values.push(acc.clone());
    }
    let tail_mismatch = (&values[tau_max] - &lambda).norm() / lambda.norm().max(f64::MIN_POSITIVE);
    if tail_mismatch > tail_tol {
        warn!("K1 tail mismatch {tail_mismatch:.3e} exceeds tolerance {tail_tol:.1e}");
    }

    let target = &lambda * &obs.omega_inf * lambda.transpose();
    let (rotation_residual, rotation_condition) = match Cholesky::new(symmetrize(&target)) {
        Some(ch) => {
            let gm = ch.l();
            let cond = {
                let (vals, _) = sym_eigen(&target);
                (vals[d - 1] / vals[0]).sqrt()
            };
            match gm.try_inverse() {
                Some(gi) => {
                    let o = gi * real_part(&m);
                    ((&o * o.transpose() - Mat::identity(d, d)).norm(), cond)
                }
                None => (f64::INFINITY, f64::INFINITY),
            }
        }
        None => (f64::INFINITY, f64::INFINITY),
    };

    let kernel = ImpactKernel {
        delta: obs.delta,
        values,
        k0,
        lambda,
        provenance: Provenance::K1,
        grid: n,
    };
    let diag = K1Diagnostics {
        factor_residual: factor.residual,
        outer_residual: factor.outer_residual,
        anticausal_leakage: if causal + anti > 0.0 { anti / (causal + anti) } else { 0.0 },
        tail_mismatch,
        rotation_residual,
        rotation_condition,
    };
    Ok((kernel, diag))
}

/// Spectrum of the transient part `Γ = K − Λ` extended two-sidedly with
/// `Γ(−k) = Γ(k)^T` and `Γ(0) = K(0) − Λ`, on an `n`-point grid. A lag exactly at
/// the Nyquist index `n/2` gets half weight on each side.
pub fn transient_spectrum(k: &ImpactKernel, n: usize) -> Result<Vec<CMat>> {
    let tau_max = k.tau_max();
    if 2 * tau_max > n {
        return Err(Error::LatticeMismatch(format!(
            "grid of {n} points cannot hold {tau_max} lags on each side"
        )));
    }
    let d = k.d();
    let mut seq = vec![CMat::zeros(d, d); n];
    seq[0] = to_complex(&(&k.values[0] - &k.lambda));
    for (lag, v) in k.values.iter().enumerate().skip(1) {
        let gamma = to_complex(&(v - &k.lambda));
        if 2 * lag == n {
            seq[lag] += (&gamma + gamma.transpose()) * Complex64::new(0.5, 0.0);
        } else {
            seq[lag] += &gamma;
            seq[n - lag] += gamma.transpose();
        }
    }
    Ok(fft_matrices(&seq, false))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct K2Report {
    pub grid: usize,
    /// Smallest eigenvalue of the Hermitian transient spectrum before clipping.
    pub min_eig_before: f64,
    pub min_eig_after: f64,
    /// Frobenius distance between the spectra, summed over the grid.
    pub spectral_distance: f64,
    pub k0_before: Mat,
    pub k0_after: Mat,
    pub lambda: Mat,
    pub tail_mismatch: f64,
}

/// Projects the Hermitian part of the transient spectrum onto PSD matrices frequency
/// by frequency and maps back to the lag lattice (lags `0..=n/2`).
pub fn regularize_k2(k1: &ImpactKernel) -> Result<(ImpactKernel, K2Report)> {
    let n = k1.spectral_grid();
    let spec = transient_spectrum(k1, n)?;
    let half = Complex64::new(0.5, 0.0);
    let results: Vec<(CMat, f64, f64, f64)> = spec
        .par_iter()
        .map(|z| {
            let herm = (z + z.adjoint()) * half;
            let anti = z - &herm;
            let before = herm_min_eig(&herm);
            let clipped = clip_hermitian(&herm);
            let dist = (&clipped - &herm).norm_squared();
            let after = herm_min_eig(&clipped);
            (clipped + anti, before, after, dist)
        })
        .collect();
    let new_spec: Vec<CMat> = results.iter().map(|r| r.0.clone()).collect();
    let min_before = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let min_after = results.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let distance = results.iter().map(|r| r.3).sum::<f64>().sqrt();
    let lags = ifft_matrices(&new_spec);
    let values: Vec<Mat> = (0..=n / 2).map(|k| real_part(&lags[k]) + &k1.lambda).collect();
    let k0 = values[0].clone();
    let tail = (&values[n / 2] - &k1.lambda).norm() / k1.lambda.norm().max(f64::MIN_POSITIVE);
    let report = K2Report {
        grid: n,
        min_eig_before: min_before,
        min_eig_after: min_after,
        spectral_distance: distance,
        k0_before: k1.k0.clone(),
        k0_after: k0.clone(),
        lambda: k1.lambda.clone(),
        tail_mismatch: tail,
    };
    Ok((
        ImpactKernel {
            delta: k1.delta,
            values,
            k0,
            lambda: k1.lambda.clone(),
            provenance: Provenance::K2,
            grid: n,
        },
        report,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub tol: f64,
    /// `‖K(0) − K(0)^T‖_F / ‖K(0)‖_F`.
    pub k0_symmetry: f64,
    /// `‖S + S^T‖_F / ‖S‖_F` for the one-sided 2nd-order difference `S ≈ K'(0)`.
    /// Reported only: it does not enter the verdict.
    pub kprime0_antisymmetry: f64,
    pub min_eig: f64,
    pub spectral_scale: f64,
    pub lambda_symmetry: f64,
    pub lambda_min_eig: f64,
    pub k0_symmetric: bool,
    pub spectrum_psd: bool,
    pub lambda_ok: bool,
    pub verdict: bool,
    pub label: String,
}

pub fn nsa_check(k: &ImpactKernel, tol: f64) -> Result<AdmissibilityReport> {
    let rel = |a: &Mat, b: &Mat| a.norm() / b.norm().max(f64::MIN_POSITIVE);
    let k0_symmetry = rel(&(&k.k0 - k.k0.transpose()), &k.k0);
    let lag1 = k.lag(1);
    let lag2 = k.lag(2);
    let slope = (&k.k0 * -3.0 + lag1 * 4.0 - lag2) / (2.0 * k.delta);
    let kprime0_antisymmetry = if slope.norm() > 0.0 {
        rel(&(&slope + slope.transpose()), &slope)
    } else {
        0.0
    };
    let n = k.spectral_grid();
    let spec = transient_spectrum(k, n)?;
    let (min_eig, scale) = spec
        .par_iter()
        .map(|z| (herm_min_eig(z), herm_max_abs_eig(z)))
        .reduce(|| (f64::INFINITY, 0.0), |a, b| (a.0.min(b.0), a.1.max(b.1)));
    let scale = scale.max(k.k0.norm()).max(f64::MIN_POSITIVE);
    let lambda_symmetry = rel(&(&k.lambda - k.lambda.transpose()), &k.lambda);
    let lambda_min_eig = min_eig_sym(&k.lambda);
    let k0_symmetric = k0_symmetry <= tol;
    let spectrum_psd = min_eig >= -tol * scale;
    let lambda_ok = lambda_symmetry <= tol && lambda_min_eig >= -tol * k.lambda.norm();
    let verdict = k0_symmetric && spectrum_psd && lambda_ok;
    Ok(AdmissibilityReport {
        tol,
        k0_symmetry,
        kprime0_antisymmetry,
        min_eig,
        spectral_scale: scale,
        lambda_symmetry,
        lambda_min_eig,
        k0_symmetric,
        spectrum_psd,
        lambda_ok,
        verdict,
        label: if verdict {
            "necessary-conditions pass".into()
        } else {
            "necessary-conditions fail".into()
        },
    })
}
