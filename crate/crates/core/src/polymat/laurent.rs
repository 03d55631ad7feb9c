use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{fft_matrices, ifft_matrices, to_complex, CMat, Mat};

/// Matrix Laurent polynomial `M(z) = Σ_k C_k z^{-k}` for `k = lo, lo+1, ...`.
///
/// `z^{-1}` is a one-lag delay, so on the unit circle `M(e^{iω}) = Σ_k C_k e^{-iωk}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaurentMatrix {
    pub lo: isize,
    pub coeffs: Vec<Mat>,
}

impl LaurentMatrix {
    pub fn new(lo: isize, coeffs: Vec<Mat>) -> Self {
        assert!(!coeffs.is_empty(), "Laurent matrix needs at least one coefficient");
        LaurentMatrix { lo, coeffs }
    }

    pub fn constant(m: Mat) -> Self {
        Self::new(0, vec![m])
    }

    pub fn identity(d: usize) -> Self {
        Self::constant(Mat::identity(d, d))
    }

    pub fn nrows(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn ncols(&self) -> usize {
        self.coeffs[0].ncols()
    }

    pub fn hi(&self) -> isize {
        self.lo + self.coeffs.len() as isize - 1
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest `|k|` with a stored coefficient.
    pub fn order(&self) -> usize {
        self.lo.unsigned_abs().max(self.hi().unsigned_abs())
    }

    pub fn coeff(&self, k: isize) -> Mat {
        if k < self.lo || k > self.hi() {
            Mat::zeros(self.nrows(), self.ncols())
        } else {
            self.coeffs[(k - self.lo) as usize].clone()
        }
    }

    fn coeff_ref(&self, k: isize) -> Option<&Mat> {
        if k < self.lo || k > self.hi() {
            None
        } else {
            Some(&self.coeffs[(k - self.lo) as usize])
        }
    }

    /// Re-express on the lag range `[lo, hi]`, padding with zeros.
    pub fn with_range(&self, lo: isize, hi: isize) -> Self {
        let coeffs = (lo..=hi).map(|k| self.coeff(k)).collect();
        Self::new(lo, coeffs)
    }

    pub fn add(&self, other: &Self) -> Self {
        let lo = self.lo.min(other.lo);
        let hi = self.hi().max(other.hi());
        let coeffs = (lo..=hi).map(|k| self.coeff(k) + other.coeff(k)).collect();
        Self::new(lo, coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.lo, self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Polynomial product (matrix convolution of the coefficient sequences).
    pub fn mul(&self, other: &Self) -> Self {
        let (r, c) = (self.nrows(), other.ncols());
        let n = self.len() + other.len() - 1;
        let mut coeffs = vec![Mat::zeros(r, c); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Self::new(self.lo + other.lo, coeffs)
    }

    /// Left multiplication by a constant matrix.
    pub fn premul(&self, m: &Mat) -> Self {
        Self::new(self.lo, self.coeffs.iter().map(|c| m * c).collect())
    }

    /// Para-conjugate `M~(z) = M(1/z)^T`: coefficient at lag `k` becomes `C_{-k}^T`.
    pub fn paraconj(&self) -> Self {
        let coeffs = self.coeffs.iter().rev().map(|c| c.transpose()).collect();
        Self::new(-self.hi(), coeffs)
    }

    pub fn frob_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt()
    }

    /// Largest `‖C_k − C_{-k}^T‖_F` relative to the total norm.
    pub fn para_hermitian_residual(&self) -> f64 {
        let scale = self.frob_norm().max(f64::MIN_POSITIVE);
        let m = self.order() as isize;
        (0..=m)
            .map(|k| (self.coeff(k) - self.coeff(-k).transpose()).norm())
            .fold(0.0, f64::max)
            / scale
    }

    /// Drops outer coefficients whose largest entry is below `rel * max|entry|`.
    pub fn trim(&mut self, rel: f64) {
        let peak = self
            .coeffs
            .iter()
            .map(|c| c.amax())
            .fold(0.0, f64::max);
        let thr = rel * peak;
        let mut start = 0;
        let mut end = self.coeffs.len();
        while end - start > 1 && self.coeffs[start].amax() <= thr {
            start += 1;
        }
        while end - start > 1 && self.coeffs[end - 1].amax() <= thr {
            end -= 1;
        }
        if start > 0 || end < self.coeffs.len() {
            self.coeffs = self.coeffs[start..end].to_vec();
            self.lo += start as isize;
        }
    }

    /// Exact evaluation at `ω_k = 2πk/n`, `k = 0..n`. Coefficients are folded modulo
    /// `n`, which is exact at the roots of unity.
    pub fn eval_on_circle(&self, n: usize) -> Vec<CMat> {
        let (r, c) = (self.nrows(), self.ncols());
        let mut seq = vec![CMat::zeros(r, c); n];
        for (i, m) in self.coeffs.iter().enumerate() {
            let k = (self.lo + i as isize).rem_euclid(n as isize) as usize;
            seq[k] += to_complex(m);
        }
        fft_matrices(&seq, false)
    }

    /// Evaluation at one angular frequency.
    pub fn eval(&self, omega: f64) -> CMat {
        let mut acc = CMat::zeros(self.nrows(), self.ncols());
        for (i, m) in self.coeffs.iter().enumerate() {
            let e = Complex64::from_polar(1.0, -omega * (self.lo + i as isize) as f64);
            acc += m.map(|x| e * x);
        }
        acc
    }

    /// Inverse of [`eval_on_circle`]: lags `lo..=hi` of the real part of the IFFT.
    pub fn from_circle(samples: &[CMat], lo: isize, hi: isize) -> Self {
        let n = samples.len() as isize;
        let lags = ifft_matrices(samples);
        let coeffs = (lo..=hi)
            .map(|k| lags[k.rem_euclid(n) as usize].map(|z| z.re))
            .collect();
        Self::new(lo, coeffs)
    }

    /// Entry `(i, j)` as a scalar coefficient vector starting at lag `lo`.
    pub fn entry(&self, i: usize, j: usize) -> Vec<f64> {
        self.coeffs.iter().map(|c| c[(i, j)]).collect()
    }

    pub(crate) fn entry_ref(&self, k: isize) -> Option<&Mat> {
        self.coeff_ref(k)
    }
}

/// Smallest power of two `>= n`.
pub fn pow2_at_least(n: usize) -> usize {
    n.max(1).next_power_of_two()
}
