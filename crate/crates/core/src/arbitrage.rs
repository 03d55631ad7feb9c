//! Strategy costs under a kernel, round-trip constructions, arbitrage search and
//! impact-predicted prices.

use nalgebra::{DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::ImpactKernel;
use crate::linalg::{symmetrize, Mat};
use crate::observables::BinnedSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    /// Trading rate in contracts per second.
    pub rate: f64,
}

impl Piece {
    pub fn area(&self) -> f64 {
        self.rate * (self.end - self.start)
    }
}

/// Piecewise-constant trading rates per asset on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub horizon: f64,
    pub pieces: Vec<Vec<Piece>>,
}

impl Strategy {
    pub fn d(&self) -> usize {
        self.pieces.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidInput(format!("bad horizon {}", self.horizon)));
        }
        for (i, ps) in self.pieces.iter().enumerate() {
            let mut sorted: Vec<&Piece> = ps.iter().collect();
            sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
            for p in &sorted {
                if !(p.start >= 0.0 && p.end >= p.start && p.end <= self.horizon * (1.0 + 1e-12))
                    || !p.rate.is_finite()
                {
                    return Err(Error::InvalidInput(format!("asset {i}: invalid piece {p:?}")));
                }
            }
            if sorted.windows(2).any(|w| w[1].start < w[0].end) {
                return Err(Error::InvalidInput(format!("asset {i}: overlapping pieces")));
            }
        }
        Ok(())
    }

    /// Net traded quantity per asset.
    pub fn net_position(&self) -> Vec<f64> {
        self.pieces.iter().map(|ps| ps.iter().map(Piece::area).sum()).collect()
    }

    pub fn is_round_trip(&self) -> bool {
        self.pieces.iter().all(|ps| {
            let net: f64 = ps.iter().map(Piece::area).sum();
            let gross: f64 = ps.iter().map(|p| p.area().abs()).sum();
            net.abs() <= 1e-12 * gross.max(f64::MIN_POSITIVE)
        })
    }

    pub fn scaled(&self, a: f64) -> Self {
        Strategy {
            horizon: self.horizon,
            pieces: self
                .pieces
                .iter()
                .map(|ps| ps.iter().map(|p| Piece { rate: a * p.rate, ..*p }).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub total: f64,
    /// Contribution of the plateau `Λ`.
    pub permanent: f64,
    /// Contribution of `K − Λ`.
    pub transient: f64,
    /// Cost under the constant kernel `K(0)`, for reference.
    pub immediate: f64,
}

/// Overlap length of `[a0, a1]` and `[b0 + u, b1 + u]`.
fn overlap(a0: f64, a1: f64, b0: f64, b1: f64, u: f64) -> f64 {
    (a1.min(b1 + u) - a0.max(b0 + u)).max(0.0)
}

/// `∫_0^∞ g(u) w(u) du` where `w` is the overlap trapezoid of two pieces and `g` is
/// piecewise linear with knots in `knots`. Simpson is exact on each quadratic segment.
fn pair_integral<F: Fn(f64) -> f64>(a: &Piece, b: &Piece, g: F, knots: &[f64]) -> f64 {
    let hi = a.end - b.start;
    if hi <= 0.0 {
        return 0.0;
    }
    let lo = (a.start - b.end).max(0.0);
    let mut pts = vec![lo, hi, a.start - b.start, a.end - b.end];
    pts.extend(knots.iter().copied().filter(|&k| k > lo && k < hi));
    pts.retain(|&p| p >= lo && p <= hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * hi.abs().max(1.0));
    let f = |u: f64| g(u) * overlap(a.start, a.end, b.start, b.end, u);
    pts.windows(2)
        .map(|w| {
            let (x0, x1) = (w[0], w[1]);
            let m = 0.5 * (x0 + x1);
            (x1 - x0) / 6.0 * (f(x0) + 4.0 * f(m) + f(x1))
        })
        .sum()
}

fn quadratic_cost<F: Fn(f64) -> Mat>(s: &Strategy, kernel: F, knots: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, pi) in s.pieces.iter().enumerate() {
        for (j, pj) in s.pieces.iter().enumerate() {
            for a in pi {
                for b in pj {
                    if a.rate == 0.0 || b.rate == 0.0 {
                        continue;
                    }
                    total += a.rate * b.rate * pair_integral(a, b, |u| kernel(u)[(i, j)], knots);
                }
            }
        }
    }
    total
}

/// `C(f) = ∫_0^T ∫_0^t f(t)^T K(t − s) f(s) ds dt`, exact for the piecewise-linear
/// interpolation of the lattice kernel (with its `Λ` plateau).
pub fn cost(strategy: &Strategy, kernel: &ImpactKernel) -> Result<CostBreakdown> {
    strategy.validate()?;
    if strategy.d() != kernel.d() {
        return Err(Error::InvalidInput(format!(
            "strategy has {} assets, kernel {}",
            strategy.d(),
            kernel.d()
        )));
    }
    let n_knots = ((strategy.horizon / kernel.delta).ceil() as usize).min(kernel.tau_max() + 1);
    let knots: Vec<f64> = (0..=n_knots).map(|k| k as f64 * kernel.delta).collect();
    let total = quadratic_cost(strategy, |u| kernel.at(u), &knots);
    let permanent = quadratic_cost(strategy, |_| kernel.lambda.clone(), &[]);
    let immediate = quadratic_cost(strategy, |_| kernel.k0.clone(), &[]);
    Ok(CostBreakdown { total, permanent, transient: total - permanent, immediate })
}

/// Three-phase round trip: asset `p` buys at `v_p` on `[0, T/3]` and sells on
/// `[2T/3, T]`; asset `q` buys on `[0, T/3]` and sells on `[T/3, 2T/3]`.
pub fn pair_trading_strategy(d: usize, p: usize, q: usize, v_p: f64, v_q: f64, t: f64) -> Result<Strategy> {
    if p == q || p >= d || q >= d {
        return Err(Error::InvalidInput(format!("need distinct assets below {d}, got {p}, {q}")));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidInput("horizon must be positive".into()));
    }
    let mut pieces = vec![Vec::new(); d];
    let (t1, t2) = (t / 3.0, 2.0 * t / 3.0);
    pieces[p] = vec![
        Piece { start: 0.0, end: t1, rate: v_p },
        Piece { start: t2, end: t, rate: -v_p },
    ];
    pieces[q] = vec![
        Piece { start: 0.0, end: t1, rate: v_q },
        Piece { start: t1, end: t2, rate: -v_q },
    ];
    Ok(Strategy { horizon: t, pieces })
}

/// Buys `eta` at constant rate over `[0, width]` and sells it over `[tau, tau + width]`.
pub fn buy_hold_sell(eta: &[f64], tau: f64, width: f64) -> Result<Strategy> {
    if !(tau > 0.0) || !(width > 0.0) || width > tau {
        return Err(Error::InvalidInput("need 0 < width <= tau".into()));
    }
    let pieces = eta
        .iter()
        .map(|&e| {
            vec![
                Piece { start: 0.0, end: width, rate: e / width },
                Piece { start: tau, end: tau + width, rate: -e / width },
            ]
        })
        .collect();
    Ok(Strategy { horizon: tau + width, pieces })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTripResult {
    /// Cost of the witness, normalised so that `Σ_i ∫ f_i² = 1`.
    pub value: f64,
    /// Smallest eigenvalue of the Gram matrix restricted to round trips.
    pub min_eig: f64,
    /// Spectral norm of the full Gram matrix.
    pub gram_norm: f64,
    /// True when `min_eig < -1e-12 · gram_norm`, a certificate within this family.
    pub arbitrage: bool,
    pub witness: Strategy,
}

/// Gram matrix `G` of the quadratic cost on `n` uniform steps of width `h`, indexed
/// `(asset, step)` as `asset * n + step`.
pub fn gram_matrix(kernel: &ImpactKernel, n: usize, h: f64) -> Mat {
    let d = kernel.d();
    let z0 = symmetrize(&kernel.k0);
    let lags: Vec<Mat> = (0..n).map(|k| if k == 0 { z0.clone() } else { kernel.at(k as f64 * h) }).collect();
    let mut g = Mat::zeros(d * n, d * n);
    let c = 0.5 * h * h;
    for t in 0..n {
        for s in 0..n {
            for i in 0..d {
                for j in 0..d {
                    g[(i * n + t, j * n + s)] = c * if t >= s {
                        lags[t - s][(i, j)]
                    } else {
                        lags[s - t][(j, i)]
                    };
                }
            }
        }
    }
    g
}

/// Orthonormal basis of the vectors in `R^n` with zero sum (Helmert contrasts).
fn zero_sum_basis(n: usize) -> Mat {
    let mut b = Mat::zeros(n, n - 1);
    for k in 1..n {
        let norm = ((k * (k + 1)) as f64).sqrt();
        for r in 0..k {
            b[(r, k - 1)] = 1.0 / norm;
        }
        b[(k, k - 1)] = -(k as f64) / norm;
    }
    b
}

/// Minimum cost over round trips made of `n_steps` uniform pieces per asset on `[0, T]`.
pub fn min_roundtrip_cost(kernel: &ImpactKernel, n_steps: usize, t: f64) -> Result<RoundTripResult> {
    if n_steps < 2 {
        return Err(Error::InvalidInput("need at least two steps".into()));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidInput("horizon must be positive".into()));
    }
    let d = kernel.d();
    let n = n_steps;
    let h = t / n as f64;
    let g = gram_matrix(kernel, n, h);
    let basis = zero_sum_basis(n);
    let mut p = Mat::zeros(d * n, d * (n - 1));
    for i in 0..d {
        p.view_mut((i * n, i * (n - 1)), (n, n - 1)).copy_from(&basis);
    }
    let gp = symmetrize(&(p.transpose() * &g * &p));
    let eig = SymmetricEigen::new(gp);
    let (idx, &min_eig) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty spectrum");
    let y: DVector<f64> = eig.eigenvectors.column(idx).into_owned();
    let mut f = &p * y;
    // sign convention: first nonzero entry positive
    if let Some(first) = f.iter().find(|v| v.abs() > 1e-12) {
        if *first < 0.0 {
            f = -f;
        }
    }
    let f = f / h.sqrt();
    let gram_norm = SymmetricEigen::new(symmetrize(&g))
        .eigenvalues
        .iter()
        .fold(0.0_f64, |a, v| a.max(v.abs()));
    let pieces = (0..d)
        .map(|i| {
            (0..n)
                .map(|s| Piece { start: s as f64 * h, end: (s + 1) as f64 * h, rate: f[i * n + s] })
                .collect()
        })
        .collect();
    Ok(RoundTripResult {
        value: min_eig / h,
        min_eig,
        gram_norm,
        arbitrage: min_eig < -1e-12 * gram_norm,
        witness: Strategy { horizon: t, pieces },
    })
}

/// `p̂_t = p0 + Σ_{s<t} K(t − s) q_s` at bin boundaries `t = 0..=T`. With `resample`,
/// a kernel on a different lattice is interpolated onto the flow lattice.
pub fn predict_prices(
    kernel: &ImpactKernel,
    flows: &BinnedSeries,
    p0: &[f64],
    resample: bool,
) -> Result<Vec<Vec<f64>>> {
    let d = kernel.d();
    if p0.len() != d || flows.d() != d && !flows.is_empty() {
        return Err(Error::InvalidInput(format!("flows and p0 must have {d} assets")));
    }
    let same = (flows.delta - kernel.delta).abs() <= 1e-12 * kernel.delta;
    let lags: Vec<Mat> = if same {
        kernel.values.clone()
    } else if resample {
        let reach = kernel.delta * (kernel.tau_max() + 1) as f64;
        let n = (reach / flows.delta).ceil() as usize;
        (0..=n).map(|k| kernel.at(k as f64 * flows.delta)).collect()
    } else {
        return Err(Error::LatticeMismatch(format!(
            "flow bin width {} differs from kernel lattice {}",
            flows.delta, kernel.delta
        )));
    };
    let m = lags.len() - 1;
    let n = flows.len();
    let q: Vec<DVector<f64>> = flows.flow.iter().map(|v| DVector::from_column_slice(v)).collect();
    let p0 = DVector::from_column_slice(p0);
    let mut out = Vec::with_capacity(n + 1);
    // cumulative flow older than the stored lags
    let mut old = DVector::<f64>::zeros(d);
    for t in 0..=n {
        if t > m + 1 {
            old += &q[t - m - 2];
        }
        let mut p = &p0 + &kernel.lambda * &old;
        for lag in 1..=m.min(t) {
            p += &lags[lag] * &q[t - lag];
        }
        if t > m {
            p += &kernel.lambda * &q[t - m - 1];
        }
        out.push(p.iter().copied().collect());
    }
    Ok(out)
}
