//! Binning of trades and prices, and the lattice estimators of Σ and Ω(τ).

use log::warn;
use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hawkes::EventStream;
use crate::linalg::{psd_project, sym_eigen, symmetrize, CMat, Mat};
use crate::polymat::LaurentMatrix;

/// Prices sampled at increasing times, one full cross-section per time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePath {
    pub times: Vec<f64>,
    pub prices: Vec<Vec<f64>>,
}

impl PricePath {
    pub fn d(&self) -> usize {
        self.prices.first().map_or(0, Vec::len)
    }

    /// Last observation at or before `t`; the first one when `t` precedes the path.
    fn at(&self, t: f64) -> &[f64] {
        let idx = self.times.partition_point(|&s| s <= t);
        &self.prices[idx.saturating_sub(1)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedSeries {
    pub delta: f64,
    pub day: usize,
    pub open: Vec<Vec<f64>>,
    pub close: Vec<Vec<f64>>,
    pub flow: Vec<Vec<f64>>,
}

impl BinnedSeries {
    pub fn len(&self) -> usize {
        self.flow.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flow.is_empty()
    }

    pub fn d(&self) -> usize {
        self.flow.first().map_or(0, Vec::len)
    }

    /// Series with zero flow and flat prices, useful for prediction inputs.
    pub fn from_flows(delta: f64, flow: Vec<Vec<f64>>) -> Self {
        let d = flow.first().map_or(0, Vec::len);
        let flat = vec![vec![0.0; d]; flow.len()];
        BinnedSeries { delta, day: 0, open: flat.clone(), close: flat, flow }
    }
}

/// Session-edge trimming applied when binning.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BinOptions {
    /// Seconds dropped at the start of the stream (burn-in).
    pub trim_start: f64,
    /// Seconds dropped at the end of the stream.
    pub trim_end: f64,
}

pub fn bin(
    stream: &EventStream,
    prices: &PricePath,
    delta: f64,
    opts: BinOptions,
) -> Result<BinnedSeries> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!("bin width must be positive, got {delta}")));
    }
    if prices.times.is_empty() || !(stream.horizon > 0.0) {
        return Err(Error::InvalidInput("empty input: no prices or zero horizon".into()));
    }
    let d = prices.d();
    if prices.prices.iter().any(|p| p.len() != d) {
        return Err(Error::InvalidInput("ragged price cross-sections".into()));
    }
    if prices.times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("price times are not sorted".into()));
    }
    if let Some(e) = stream.events.iter().find(|e| e.asset >= d) {
        return Err(Error::InvalidInput(format!(
            "event asset {} out of range for {d} priced assets",
            e.asset
        )));
    }
    let last_price = *prices.times.last().unwrap();
    let last_event = stream.events.last().map_or(0.0, |e| e.time);
    if last_price < last_event {
        return Err(Error::InvalidInput(format!(
            "price path ends at {last_price} before the last event at {last_event}"
        )));
    }

    let n_bins = (stream.horizon / delta - 1e-9).ceil().max(1.0) as usize;
    let mut flow = vec![vec![0.0; d]; n_bins];
    for e in &stream.events {
        let k = ((e.time / delta).floor() as usize).min(n_bins - 1);
        flow[k][e.asset] += e.side.sign() * e.size;
    }
    let mut close = Vec::with_capacity(n_bins);
    for k in 0..n_bins {
        let t = ((k + 1) as f64 * delta).min(stream.horizon);
        close.push(prices.at(t).to_vec());
    }
    let mut open = Vec::with_capacity(n_bins);
    open.push(prices.at(0.0).to_vec());
    open.extend(close[..n_bins - 1].iter().cloned());

    let first = (opts.trim_start / delta).ceil() as usize;
    let end_time = stream.horizon - opts.trim_end;
    let last = ((end_time / delta + 1e-9).floor() as usize).min(n_bins);
    if first >= last {
        return Err(Error::InsufficientData("trimming removes every bin".into()));
    }
    Ok(BinnedSeries {
        delta,
        day: 0,
        open: open[first..last].to_vec(),
        close: close[first..last].to_vec(),
        flow: flow[first..last].to_vec(),
    })
}

/// Signed flow per bin without prices (open and close left at zero).
pub fn bin_flows(stream: &EventStream, d: usize, delta: f64) -> Result<BinnedSeries> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!("bin width must be positive, got {delta}")));
    }
    let n_bins = (stream.horizon / delta - 1e-9).ceil().max(0.0) as usize;
    let mut flow = vec![vec![0.0; d]; n_bins];
    for e in &stream.events {
        if e.asset >= d {
            return Err(Error::InvalidInput(format!("event asset {} out of range", e.asset)));
        }
        let k = ((e.time / delta).floor() as usize).min(n_bins.saturating_sub(1));
        if let Some(row) = flow.get_mut(k) {
            row[e.asset] += e.side.sign() * e.size;
        }
    }
    let mut s = BinnedSeries::from_flows(delta, flow);
    if s.flow.is_empty() {
        s.open.clear();
        s.close.clear();
    }
    Ok(s)
}

/// Per-day `1/(T-1) Σ r r^T`, averaged over days with at least two bins.
pub fn estimate_sigma(series: &[BinnedSeries]) -> Result<Mat> {
    let per_day: Vec<Mat> = series
        .par_iter()
        .filter(|s| s.len() >= 2)
        .map(|s| {
            let d = s.d();
            let mut acc = Mat::zeros(d, d);
            for (o, c) in s.open.iter().zip(&s.close) {
                let r = DVector::from_iterator(d, c.iter().zip(o).map(|(c, o)| c - o));
                acc += &r * r.transpose();
            }
            acc / (s.len() - 1) as f64
        })
        .collect();
    if per_day.is_empty() {
        return Err(Error::InsufficientData("no day has at least two bins".into()));
    }
    let n = per_day.len() as f64;
    let d = per_day[0].nrows();
    let sum = per_day.iter().fold(Mat::zeros(d, d), |a, m| a + m);
    Ok(symmetrize(&(sum / n)))
}

/// `1/T Σ_t q_{t+τ} q_t^T` for one day; negative `tau` gives `Σ_t q_t q_{t-τ}^T`.
fn day_lag_cov(flow: &[Vec<f64>], tau: isize) -> Mat {
    let d = flow.first().map_or(0, Vec::len);
    let n = flow.len();
    let lag = tau.unsigned_abs();
    let mut acc = Mat::zeros(d, d);
    if lag >= n {
        return acc;
    }
    for t in 0..n - lag {
        let (lead, base) = if tau >= 0 { (&flow[t + lag], &flow[t]) } else { (&flow[t], &flow[t + lag]) };
        for i in 0..d {
            let li = lead[i];
            if li == 0.0 {
                continue;
            }
            for j in 0..d {
                acc[(i, j)] += li * base[j];
            }
        }
    }
    acc / n as f64
}

fn usable_days(series: &[BinnedSeries], tau_max: usize) -> Vec<&BinnedSeries> {
    let mut kept = Vec::new();
    for s in series {
        if s.len() < tau_max + 2 {
            warn!("dropping day {} with {} bins (< tau_max + 2 = {})", s.day, s.len(), tau_max + 2);
        } else {
            kept.push(s);
        }
    }
    kept
}

/// Lag covariances `Ω(0..=tau_max)` averaged over days with equal weights.
pub fn estimate_omega(series: &[BinnedSeries], tau_max: usize) -> Result<Vec<Mat>> {
    let days = usable_days(series, tau_max);
    if days.is_empty() {
        return Err(Error::InsufficientData(format!(
            "tau_max = {tau_max} is too large: no day has at least {} bins",
            tau_max + 2
        )));
    }
    let per_day: Vec<Vec<Mat>> = days
        .par_iter()
        .map(|s| (0..=tau_max as isize).map(|k| day_lag_cov(&s.flow, k)).collect())
        .collect();
    let n = per_day.len() as f64;
    let d = days[0].d();
    Ok((0..=tau_max)
        .map(|k| per_day.iter().fold(Mat::zeros(d, d), |a, day| a + &day[k]) / n)
        .collect())
}

/// Direct estimate of `Ω(τ)` at a possibly negative lag.
pub fn estimate_omega_at(series: &[BinnedSeries], tau: isize) -> Result<Mat> {
    let days = usable_days(series, tau.unsigned_abs());
    if days.is_empty() {
        return Err(Error::InsufficientData(format!("lag {tau} exceeds every day")));
    }
    let d = days[0].d();
    let sum = days.iter().fold(Mat::zeros(d, d), |a, s| a + day_lag_cov(&s.flow, tau));
    Ok(sum / days.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Taper {
    #[default]
    Bartlett,
    Raw,
}

impl Taper {
    pub fn weight(self, tau: usize, tau_max: usize) -> f64 {
        match self {
            Taper::Bartlett => 1.0 - tau as f64 / (tau_max as f64 + 1.0),
            Taper::Raw => 1.0,
        }
    }
}

/// `(Ω(0), Ω∞)` with `Ω∞ = Ω(0) + Σ_{τ≥1} w_τ (Ω(τ) + Ω(τ)^T)`, symmetrised. Small
/// negative eigenvalues (within 1e-8·trace) are clipped, larger ones are an error.
pub fn omega_aggregates(lags: &[Mat], taper: Taper) -> Result<(Mat, Mat)> {
    if lags.is_empty() {
        return Err(Error::InvalidInput("empty lag list".into()));
    }
    let tau_max = lags.len() - 1;
    let zero = symmetrize(&lags[0]);
    let mut inf = lags[0].clone();
    for (k, m) in lags.iter().enumerate().skip(1) {
        inf += (m + m.transpose()) * taper.weight(k, tau_max);
    }
    let inf = symmetrize(&inf);
    let (vals, _) = sym_eigen(&inf);
    let lo = vals[0];
    if lo < 0.0 {
        let tr = inf.trace().abs();
        if lo < -1e-8 * tr {
            return Err(Error::InsufficientData(format!(
                "aggregate flow covariance is indefinite (eigenvalue {lo:.3e}, trace {tr:.3e})"
            )));
        }
        return Ok((zero, psd_project(&inf)));
    }
    Ok((zero, inf))
}

/// Lattice spectrum `Ω(0) + Σ_{τ≥1} w_τ (Ω(τ) e^{-iωτ} + Ω(τ)^T e^{iωτ})`.
pub fn lag_spectrum(lags: &[Mat], taper: Taper, omegas: &[f64]) -> Vec<CMat> {
    let tau_max = lags.len().saturating_sub(1);
    omegas
        .iter()
        .map(|&w| {
            let mut s = lags[0].map(|x| Complex64::new(x, 0.0));
            for (k, m) in lags.iter().enumerate().skip(1) {
                let wt = taper.weight(k, tau_max);
                let e = Complex64::from_polar(wt, -w * k as f64);
                s += m.map(|x| x * e) + m.transpose().map(|x| x * e.conj());
            }
            s
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSet {
    pub delta: f64,
    pub taper: Taper,
    pub sigma: Mat,
    pub omega: Vec<Mat>,
    pub omega_zero: Mat,
    pub omega_inf: Mat,
    pub n_days: usize,
    pub n_bins: usize,
}

impl ObservableSet {
    pub fn estimate(series: &[BinnedSeries], tau_max: usize, taper: Taper) -> Result<Self> {
        let delta = series
            .first()
            .map(|s| s.delta)
            .ok_or_else(|| Error::InsufficientData("no binned days".into()))?;
        if series.iter().any(|s| (s.delta - delta).abs() > 1e-12 * delta) {
            return Err(Error::LatticeMismatch("days have different bin widths".into()));
        }
        let sigma = estimate_sigma(series)?;
        let omega = estimate_omega(series, tau_max)?;
        let (omega_zero, omega_inf) = omega_aggregates(&omega, taper)?;
        let n_days = series.iter().filter(|s| s.len() >= tau_max + 2).count();
        Ok(ObservableSet {
            delta,
            taper,
            sigma,
            omega,
            omega_zero,
            omega_inf,
            n_days,
            n_bins: series.iter().map(BinnedSeries::len).sum(),
        })
    }

    pub fn d(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn tau_max(&self) -> usize {
        self.omega.len() - 1
    }

    /// Para-Hermitian Laurent matrix of the (tapered) lags: `C_k = w_k Ω(k)`, `C_{-k} = C_k^T`.
    pub fn to_laurent(&self) -> LaurentMatrix {
        let m = self.tau_max();
        let mut coeffs = Vec::with_capacity(2 * m + 1);
        for k in (1..=m).rev() {
            coeffs.push(self.omega[k].transpose() * self.taper.weight(k, m));
        }
        for k in 0..=m {
            coeffs.push(&self.omega[k] * self.taper.weight(k, m));
        }
        coeffs[m] = symmetrize(&coeffs[m]);
        LaurentMatrix::new(-(m as isize), coeffs)
    }
}
