use serde::{Deserialize, Serialize};

use super::laurent::LaurentMatrix;
use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Relative amplitude below which outer coefficients are dropped after each sweep.
pub const TRIM_REL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sbr2Result {
    /// Para-unitary transform with `H R H~ ≈ Γ`.
    pub h: LaurentMatrix,
    /// Approximately diagonal para-Hermitian matrix.
    pub gamma: LaurentMatrix,
    pub iterations: usize,
    pub converged: bool,
    /// Dominant off-diagonal magnitude before each iteration (and after the last).
    pub max_offdiag: Vec<f64>,
    /// Total off-diagonal energy, same indexing as `max_offdiag`.
    pub offdiag_energy: Vec<f64>,
    /// Energy on the lag-zero diagonal, same indexing.
    pub diag0_energy: Vec<f64>,
}

fn dominant_offdiag(r: &LaurentMatrix) -> (f64, usize, usize, isize) {
    let d = r.nrows();
    let mut best = (0.0, 0, 1.min(d - 1), 0);
    for (idx, c) in r.coeffs.iter().enumerate() {
        let k = r.lo + idx as isize;
        for i in 0..d {
            for j in 0..d {
                if i != j && c[(i, j)].abs() > best.0 {
                    best = (c[(i, j)].abs(), i, j, k);
                }
            }
        }
    }
    best
}

fn offdiag_energy(r: &LaurentMatrix) -> f64 {
    let d = r.nrows();
    r.coeffs
        .iter()
        .map(|c| {
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        s += c[(i, j)] * c[(i, j)];
                    }
                }
            }
            s
        })
        .sum()
}

fn diag0_energy(r: &LaurentMatrix) -> f64 {
    let c = r.coeff(0);
    c.diagonal().norm_squared()
}

/// `R' = B R B~` with `B = diag(z^{-s_i})`, `s_c = tau`, zero elsewhere.
fn delay_para(r: &LaurentMatrix, c: usize, tau: isize) -> LaurentMatrix {
    let d = r.nrows();
    let a = tau.abs();
    let lo = r.lo - a;
    let hi = r.hi() + a;
    let shift = |i: usize| if i == c { tau } else { 0 };
    let coeffs = (lo..=hi)
        .map(|k| {
            let mut m = Mat::zeros(d, d);
            for i in 0..d {
                for j in 0..d {
                    if let Some(src) = r.entry_ref(k - shift(i) + shift(j)) {
                        m[(i, j)] = src[(i, j)];
                    }
                }
            }
            m
        })
        .collect();
    LaurentMatrix::new(lo, coeffs)
}

/// `H' = B H`, row `c` delayed by `tau`.
fn delay_rows(h: &LaurentMatrix, c: usize, tau: isize) -> LaurentMatrix {
    let (d, n) = (h.nrows(), h.ncols());
    let lo = h.lo.min(h.lo + tau);
    let hi = h.hi().max(h.hi() + tau);
    let coeffs = (lo..=hi)
        .map(|k| {
            let mut m = Mat::zeros(d, n);
            for i in 0..d {
                let s = if i == c { tau } else { 0 };
                if let Some(src) = h.entry_ref(k - s) {
                    m.row_mut(i).copy_from(&src.row(i));
                }
            }
            m
        })
        .collect();
    LaurentMatrix::new(lo, coeffs)
}

fn rotate_rows(m: &mut Mat, p: usize, q: usize, cs: f64, sn: f64) {
    for col in 0..m.ncols() {
        let (a, b) = (m[(p, col)], m[(q, col)]);
        m[(p, col)] = cs * a + sn * b;
        m[(q, col)] = -sn * a + cs * b;
    }
}

fn rotate_cols(m: &mut Mat, p: usize, q: usize, cs: f64, sn: f64) {
    for row in 0..m.nrows() {
        let (a, b) = (m[(row, p)], m[(row, q)]);
        m[(row, p)] = cs * a + sn * b;
        m[(row, q)] = -sn * a + cs * b;
    }
}

/// Sequential best rotation (simple SBR2) polynomial EVD of a para-Hermitian matrix.
///
/// Each iteration moves the dominant off-diagonal coefficient to lag zero with an
/// elementary delay and annihilates it with a Jacobi rotation applied at every lag.
/// Stops once the dominant off-diagonal magnitude is at most `tol · ‖R‖_F`.
pub fn sbr2_pevd(r: &LaurentMatrix, tol: f64, max_iter: usize) -> Result<Sbr2Result> {
    if r.nrows() != r.ncols() {
        return Err(Error::InvalidInput("SBR2 needs a square Laurent matrix".into()));
    }
    let ph = r.para_hermitian_residual();
    if ph > 1e-8 {
        return Err(Error::InvalidInput(format!(
            "input is not para-Hermitian (relative residual {ph:.3e})"
        )));
    }
    let d = r.nrows();
    let mut r = r.clone();
    // enforce exact symmetry so rotations keep the structure
    let m = r.order() as isize;
    r = r.with_range(-m, m);
    for k in 0..=m {
        let avg = (r.coeff(k) + r.coeff(-k).transpose()) * 0.5;
        r.coeffs[(k + m) as usize] = avg.clone();
        r.coeffs[(m - k) as usize] = avg.transpose();
    }
    let norm = r.frob_norm();
    let mut h = LaurentMatrix::identity(d);
    let mut out = Sbr2Result {
        h: h.clone(),
        gamma: r.clone(),
        iterations: 0,
        converged: false,
        max_offdiag: Vec::new(),
        offdiag_energy: Vec::new(),
        diag0_energy: Vec::new(),
    };
    if d == 1 || norm == 0.0 {
        out.converged = true;
        out.max_offdiag.push(0.0);
        out.offdiag_energy.push(0.0);
        out.diag0_energy.push(diag0_energy(&r));
        return Ok(out);
    }
    let thr = tol * norm;
    let mut iter = 0;
    loop {
        let (g, p, q, tau) = dominant_offdiag(&r);
        out.max_offdiag.push(g);
        out.offdiag_energy.push(offdiag_energy(&r));
        out.diag0_energy.push(diag0_energy(&r));
        if g <= thr {
            out.converged = true;
            break;
        }
        if iter >= max_iter {
            break;
        }
        if tau != 0 {
            r = delay_para(&r, q, tau);
            h = delay_rows(&h, q, tau);
        }
        let r0 = r.coeff(0);
        let (a, e, b) = (r0[(p, p)], r0[(q, q)], r0[(p, q)]);
        let theta = 0.5 * (2.0 * b).atan2(a - e);
        let (sn, cs) = theta.sin_cos();
        for c in r.coeffs.iter_mut() {
            rotate_rows(c, p, q, cs, sn);
            rotate_cols(c, p, q, cs, sn);
        }
        // exact zero at the pivot
        let zero_idx = (-r.lo) as usize;
        r.coeffs[zero_idx][(p, q)] = 0.0;
        r.coeffs[zero_idx][(q, p)] = 0.0;
        for c in h.coeffs.iter_mut() {
            rotate_rows(c, p, q, cs, sn);
        }
        trim_symmetric(&mut r, TRIM_REL);
        h.trim(TRIM_REL);
        iter += 1;
    }
    out.iterations = iter;
    out.h = h;
    out.gamma = r;
    Ok(out)
}

/// Trims a para-Hermitian matrix keeping its lag range symmetric about zero.
fn trim_symmetric(r: &mut LaurentMatrix, rel: f64) {
    let peak = r.coeffs.iter().map(|c| c.amax()).fold(0.0, f64::max);
    let thr = rel * peak;
    let mut m = r.hi().max(-r.lo);
    while m > 0 {
        let outer = r.coeff(m).amax().max(r.coeff(-m).amax());
        if outer > thr {
            break;
        }
        m -= 1;
    }
    if m < r.hi().max(-r.lo) || r.lo != -r.hi() {
        *r = r.with_range(-m, m);
    }
}
