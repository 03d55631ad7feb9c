//! Small dense linear-algebra and FFT helpers shared across modules.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

pub fn to_complex(m: &Mat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn real_part(m: &CMat) -> Mat {
    m.map(|z| z.re)
}

/// Eigen-decomposition of the symmetric part of `m`, eigenvalues ascending.
pub fn sym_eigen(m: &Mat) -> (Vec<f64>, Mat) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let n = m.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = Mat::zeros(n, n);
    for (k, &i) in idx.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub fn min_eig_sym(m: &Mat) -> f64 {
    sym_eigen(m).0.first().copied().unwrap_or(0.0)
}

/// Smallest eigenvalue of a Hermitian complex matrix.
pub fn herm_min_eig(m: &CMat) -> f64 {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Largest absolute eigenvalue of a Hermitian complex matrix.
pub fn herm_max_abs_eig(m: &CMat) -> f64 {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}

/// Replaces every negative eigenvalue of the Hermitian matrix `h` by zero.
pub fn clip_hermitian(h: &CMat) -> CMat {
    let herm = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let vals = eig.eigenvalues.map(|v| Complex64::new(v.max(0.0), 0.0));
    let u = &eig.eigenvectors;
    u * CMat::from_diagonal(&vals) * u.adjoint()
}

/// Symmetric PSD square root. Negative eigenvalues above `-tol * scale` are
/// treated as zero, larger ones are an error.
pub fn psd_sqrt(m: &Mat, tol: f64) -> Result<Mat> {
    let (vals, vecs) = sym_eigen(m);
    let scale = vals.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    if let Some(&lo) = vals.first() {
        if lo < -tol * scale {
            return Err(Error::NotPsd(format!(
                "smallest eigenvalue {lo:.3e} (scale {scale:.3e})"
            )));
        }
    }
    let d = Mat::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|v| v.max(0.0).sqrt()),
    ));
    Ok(&vecs * d * vecs.transpose())
}

/// Projection of the symmetric part of `m` onto the PSD cone.
pub fn psd_project(m: &Mat) -> Mat {
    let (vals, vecs) = sym_eigen(m);
    let d = Mat::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|v| v.max(0.0)),
    ));
    &vecs * d * vecs.transpose()
}

pub fn spectral_radius(m: &Mat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone()
        .complex_eigenvalues()
        .iter()
        .fold(0.0_f64, |a, z| a.max(z.norm()))
}

/// Roots of `c[0] x^n + c[1] x^(n-1) + ... + c[n]` via companion-matrix eigenvalues.
pub fn poly_roots(c: &[f64]) -> Vec<Complex64> {
    let mut c = c;
    while c.len() > 1 && c[0] == 0.0 {
        c = &c[1..];
    }
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let mut comp = Mat::zeros(n, n);
    for j in 0..n {
        comp[(0, j)] = -c[j + 1] / c[0];
    }
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    comp.complex_eigenvalues().iter().cloned().collect()
}

/// Relative Frobenius norm `|a - b| / |b|`, guarded against a zero reference.
pub fn rel_frob(a: &Mat, b: &Mat) -> f64 {
    let nb = b.norm();
    let diff = (a - b).norm();
    if nb == 0.0 {
        diff
    } else {
        diff / nb
    }
}

/// Forward (`e^{-i 2 pi k n / N}`) or inverse (unnormalised) FFT applied entrywise
/// to a sequence of equally sized matrices.
pub fn fft_matrices(seq: &[CMat], inverse: bool) -> Vec<CMat> {
    let n = seq.len();
    if n == 0 {
        return Vec::new();
    }
    let (r, c) = seq[0].shape();
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut out = vec![CMat::zeros(r, c); n];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..r {
        for j in 0..c {
            for (k, m) in seq.iter().enumerate() {
                buf[k] = m[(i, j)];
            }
            fft.process(&mut buf);
            for (k, m) in out.iter_mut().enumerate() {
                m[(i, j)] = buf[k];
            }
        }
    }
    out
}

/// Inverse FFT normalised by `1/N`.
pub fn ifft_matrices(seq: &[CMat]) -> Vec<CMat> {
    let n = seq.len() as f64;
    fft_matrices(seq, true)
        .into_iter()
        .map(|m| m.map(|z| z / n))
        .collect()
}

pub fn fft_scalar(seq: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let mut buf = seq.to_vec();
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    fft.process(&mut buf);
    if inverse {
        let n = buf.len() as f64;
        buf.iter_mut().for_each(|z| *z /= n);
    }
    buf
}

/// Angular frequency of grid point `k` on an `n`-point unit-circle grid, in `(-pi, pi]`.
pub fn grid_freq(k: usize, n: usize) -> f64 {
    let w = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
    if w > std::f64::consts::PI {
        w - 2.0 * std::f64::consts::PI
    } else {
        w
    }
}
