//! Buy/sell multivariate Hawkes order flow with exponential kernels.
//!
//! The 2d-dimensional intensity is
//!
//! ```text
//! λ^a = μ + Φ^{a/a} * dN^a + Φ^{a/b} * dN^b
//! λ^b = μ + Φ^{b/a} * dN^a + Φ^{b/b} * dN^b
//! ```
//!
//! where every kernel entry is a finite sum of `α e^{-β t}`.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{ImpactKernel, Provenance};
use crate::linalg::{spectral_radius, CMat, Mat};

/// One exponential term `alpha * exp(-beta * t)`. Serialized as `[alpha, beta]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct ExpTerm {
    pub alpha: f64,
    pub beta: f64,
}

impl From<[f64; 2]> for ExpTerm {
    fn from(v: [f64; 2]) -> Self {
        ExpTerm { alpha: v[0], beta: v[1] }
    }
}

impl From<ExpTerm> for [f64; 2] {
    fn from(t: ExpTerm) -> Self {
        [t.alpha, t.beta]
    }
}

impl ExpTerm {
    pub fn new(alpha: f64, beta: f64) -> Self {
        ExpTerm { alpha, beta }
    }

    pub fn l1(&self) -> f64 {
        self.alpha / self.beta
    }

    /// `∫_0^t α e^{-β s} ds`
    pub fn integral_to(&self, t: f64) -> f64 {
        self.alpha / self.beta * (-(-self.beta * t).exp_m1())
    }

    /// Fourier transform `∫ α e^{-βt} e^{-iωt} dt`.
    pub fn fourier(&self, omega: f64) -> Complex64 {
        Complex64::new(self.alpha, 0.0) / Complex64::new(self.beta, omega)
    }
}

/// A kernel entry: sum of exponential terms.
pub type ExpSum = Vec<ExpTerm>;

/// d×d matrix of exponential sums, row = target asset, column = source asset.
pub type KernelBlock = Vec<Vec<ExpSum>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excitation {
    pub aa: KernelBlock,
    pub ab: KernelBlock,
    pub ba: KernelBlock,
    pub bb: KernelBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HawkesSpec {
    pub mu: Vec<f64>,
    pub sizes: Vec<f64>,
    pub phi: Excitation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Buy => 1.0,
            Side::Sell => -1.0,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Side::Buy => "B",
            Side::Sell => "S",
        }
    }

    pub fn parse(s: &str) -> Option<Side> {
        match s.trim() {
            "B" | "b" | "buy" => Some(Side::Buy),
            "S" | "s" | "sell" => Some(Side::Sell),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub asset: usize,
    pub side: Side,
    pub size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventStream {
    pub events: Vec<Event>,
    pub horizon: f64,
}

impl EventStream {
    /// Net signed volume per asset.
    pub fn net_volume(&self, d: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        for e in &self.events {
            v[e.asset] += e.side.sign() * e.size;
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub parameters_valid: bool,
    pub stable: bool,
    pub spectral_radius: f64,
    pub balanced: bool,
    pub balance_gap: f64,
    pub martingale_compatible: bool,
    pub messages: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.parameters_valid && self.stable && self.balanced && self.martingale_compatible
    }
}

/// Merge terms sharing a decay rate, drop zero weights, sort by decay.
pub fn canonical(sum: &[ExpTerm]) -> ExpSum {
    let mut terms: ExpSum = sum.to_vec();
    terms.sort_by(|a, b| a.beta.total_cmp(&b.beta));
    let mut out: ExpSum = Vec::new();
    for t in terms {
        match out.last_mut() {
            Some(last) if (last.beta - t.beta).abs() <= 1e-12 * t.beta.abs().max(1.0) => {
                last.alpha += t.alpha
            }
            _ => out.push(t),
        }
    }
    out.retain(|t| t.alpha.abs() > 1e-14);
    out
}

fn sums_equal(a: &[ExpTerm], b: &[ExpTerm]) -> bool {
    let (a, b) = (canonical(a), canonical(b));
    a.len() == b.len()
        && a.iter().zip(&b).all(|(x, y)| {
            let scale = x.alpha.abs().max(y.alpha.abs()).max(1e-300);
            (x.beta - y.beta).abs() <= 1e-12 * x.beta.max(1.0)
                && (x.alpha - y.alpha).abs() <= 1e-12 * scale
        })
}

fn concat(a: &[ExpTerm], b: &[ExpTerm], b_sign: f64) -> ExpSum {
    a.iter()
        .copied()
        .chain(b.iter().map(|t| ExpTerm::new(b_sign * t.alpha, t.beta)))
        .collect()
}

impl HawkesSpec {
    pub fn d(&self) -> usize {
        self.mu.len()
    }

    /// Spec without excitation: independent Poisson buys and sells.
    pub fn poisson(mu: Vec<f64>, sizes: Vec<f64>) -> Self {
        let d = mu.len();
        let z = vec![vec![Vec::new(); d]; d];
        HawkesSpec {
            mu,
            sizes,
            phi: Excitation { aa: z.clone(), ab: z.clone(), ba: z.clone(), bb: z },
        }
    }

    /// Kernel entry of the full 2d×2d kernel: row/column `< d` is buy, `>= d` sell.
    pub fn entry(&self, i: usize, j: usize) -> &ExpSum {
        let d = self.d();
        let block = match (i < d, j < d) {
            (true, true) => &self.phi.aa,
            (true, false) => &self.phi.ab,
            (false, true) => &self.phi.ba,
            (false, false) => &self.phi.bb,
        };
        &block[i % d][j % d]
    }

    fn shape_ok(&self) -> std::result::Result<(), String> {
        let d = self.d();
        if d == 0 {
            return Err("mu is empty".into());
        }
        if self.sizes.len() != d {
            return Err(format!("sizes has length {}, expected {d}", self.sizes.len()));
        }
        for (name, b) in [
            ("aa", &self.phi.aa),
            ("ab", &self.phi.ab),
            ("ba", &self.phi.ba),
            ("bb", &self.phi.bb),
        ] {
            if b.len() != d || b.iter().any(|r| r.len() != d) {
                return Err(format!("block {name} is not {d}x{d}"));
            }
        }
        Ok(())
    }

    /// Matrix of kernel L1 norms, 2d×2d.
    pub fn norm_matrix(&self) -> Mat {
        let n = 2 * self.d();
        Mat::from_fn(n, n, |i, j| self.entry(i, j).iter().map(ExpTerm::l1).sum())
    }

    /// Imbalance kernel φ = Φ^{a/a} − Φ^{b/a}, d×d, canonicalised.
    pub fn imbalance_kernel(&self) -> KernelBlock {
        let d = self.d();
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| canonical(&concat(&self.phi.aa[i][j], &self.phi.ba[i][j], -1.0)))
                    .collect()
            })
            .collect()
    }

    /// `∫_0^t φ`, or the full integral when `t` is infinite.
    pub fn imbalance_integral(&self, t: f64) -> Mat {
        let phi = self.imbalance_kernel();
        let d = self.d();
        Mat::from_fn(d, d, |i, j| {
            phi[i][j]
                .iter()
                .map(|e| if t.is_infinite() { e.l1() } else { e.integral_to(t) })
                .sum()
        })
    }
}

pub fn validate_spec(spec: &HawkesSpec) -> ValidationReport {
    let mut messages = Vec::new();
    let mut report = ValidationReport {
        parameters_valid: true,
        stable: false,
        spectral_radius: f64::NAN,
        balanced: false,
        balance_gap: f64::NAN,
        martingale_compatible: false,
        messages: Vec::new(),
    };
    if let Err(m) = spec.shape_ok() {
        report.parameters_valid = false;
        report.messages.push(m);
        return report;
    }
    let d = spec.d();
    if spec.mu.iter().any(|&m| !(m >= 0.0 && m.is_finite())) {
        report.parameters_valid = false;
        messages.push("mu must be finite and non-negative".to_string());
    }
    if spec.sizes.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        report.parameters_valid = false;
        messages.push("sizes must be finite and positive".to_string());
    }
    for i in 0..2 * d {
        for j in 0..2 * d {
            for t in spec.entry(i, j) {
                if !(t.alpha >= 0.0 && t.alpha.is_finite() && t.beta > 0.0 && t.beta.is_finite()) {
                    report.parameters_valid = false;
                    messages.push(format!("entry ({i},{j}) has invalid term {:?}", t));
                }
            }
        }
    }

    let rho = spectral_radius(&spec.norm_matrix());
    report.spectral_radius = rho;
    report.stable = rho < 1.0;
    if !report.stable {
        messages.push(format!("spectral radius {rho:.6} is not below one"));
    }

    if report.stable {
        if let Ok(m) = mean_intensities(spec) {
            let scale = m.amax().max(f64::MIN_POSITIVE);
            let gap = (0..d).map(|i| (m[i] - m[i + d]).abs()).fold(0.0, f64::max) / scale;
            report.balance_gap = gap;
            report.balanced = gap <= 1e-10;
            if !report.balanced {
                messages.push(format!("buy and sell mean intensities differ (relative gap {gap:.3e})"));
            }
        }
    } else {
        messages.push("balance not evaluated for an unstable spec".to_string());
    }

    let mut compatible = true;
    for i in 0..d {
        for j in 0..d {
            let lhs = concat(&spec.phi.aa[i][j], &spec.phi.ab[i][j], 1.0);
            let rhs = concat(&spec.phi.bb[i][j], &spec.phi.ba[i][j], 1.0);
            if !sums_equal(&lhs, &rhs) {
                compatible = false;
                messages.push(format!("entry ({i},{j}): aa + ab differs from bb + ba"));
            }
        }
    }
    report.martingale_compatible = compatible;
    report.messages = messages;
    report
}

/// Stationary mean intensities of all 2d components.
fn mean_intensities(spec: &HawkesSpec) -> Result<DVector<f64>> {
    let n = 2 * spec.d();
    let a = Mat::identity(n, n) - spec.norm_matrix();
    let rhs = DVector::from_iterator(n, spec.mu.iter().chain(spec.mu.iter()).copied());
    a.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("I - ||Phi|| is singular".into()))
}

/// Stationary one-sided (buy) intensity θ per asset.
pub fn stationary_intensity(spec: &HawkesSpec) -> Result<Vec<f64>> {
    spec.shape_ok().map_err(Error::InvalidInput)?;
    let rho = spectral_radius(&spec.norm_matrix());
    if rho >= 1.0 {
        return Err(Error::Unstable(rho));
    }
    let m = mean_intensities(spec)?;
    Ok(m.iter().take(spec.d()).copied().collect())
}

fn check_simulable(spec: &HawkesSpec) -> Result<()> {
    let report = validate_spec(spec);
    if !report.parameters_valid {
        return Err(Error::InvalidInput(report.messages.join("; ")));
    }
    if !report.stable {
        return Err(Error::Unstable(report.spectral_radius));
    }
    Ok(())
}

struct TermState {
    target: usize,
    alpha: f64,
    beta: f64,
    value: f64,
}

/// Ogata thinning with exact exponential-state recursion. Between events the
/// total intensity only decays, so its value right after the last candidate
/// dominates it until the next candidate.
pub fn simulate(spec: &HawkesSpec, horizon: f64, seed: u64) -> Result<EventStream> {
    check_simulable(spec)?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidInput(format!("horizon must be finite and >= 0, got {horizon}")));
    }
    let d = spec.d();
    let n = 2 * d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // states grouped by source component
    let mut states: Vec<Vec<TermState>> = (0..n)
        .map(|j| {
            let mut v = Vec::new();
            for i in 0..n {
                for t in spec.entry(i, j) {
                    if t.alpha > 0.0 {
                        v.push(TermState { target: i, alpha: t.alpha, beta: t.beta, value: 0.0 });
                    }
                }
            }
            v
        })
        .collect();
    let base: Vec<f64> = spec.mu.iter().chain(spec.mu.iter()).copied().collect();
    let mut lambda = base.clone();
    let mut t = 0.0;
    let mut events = Vec::new();

    loop {
        let bound: f64 = lambda.iter().sum();
        if bound <= 0.0 {
            break;
        }
        let w: f64 = rng.sample(Exp1);
        let dt = w / bound;
        t += dt;
        if t > horizon {
            break;
        }
        lambda.copy_from_slice(&base);
        for src in states.iter_mut() {
            for s in src.iter_mut() {
                s.value *= (-s.beta * dt).exp();
                lambda[s.target] += s.value;
            }
        }
        let total: f64 = lambda.iter().sum();
        let u: f64 = rng.random::<f64>() * bound;
        if u >= total {
            continue;
        }
        let mut acc = 0.0;
        let mut k = n - 1;
        for (i, l) in lambda.iter().enumerate() {
            acc += l;
            if u < acc {
                k = i;
                break;
            }
        }
        let asset = k % d;
        events.push(Event {
            time: t,
            asset,
            side: if k < d { Side::Buy } else { Side::Sell },
            size: spec.sizes[asset],
        });
        for s in states[k].iter_mut() {
            s.value += s.alpha;
            lambda[s.target] += s.alpha;
        }
    }
    Ok(EventStream { events, horizon })
}

/// Signed-flow spectral density `Ω̂(ω)` in (size units)²/sec at angular frequencies `omegas`.
pub fn analytic_flow_spectrum(spec: &HawkesSpec, omegas: &[f64]) -> Result<Vec<CMat>> {
    let theta = stationary_intensity(spec)?;
    let d = spec.d();
    let n = 2 * d;
    let mut proj = CMat::zeros(d, n);
    for i in 0..d {
        proj[(i, i)] = Complex64::new(spec.sizes[i], 0.0);
        proj[(i, i + d)] = Complex64::new(-spec.sizes[i], 0.0);
    }
    let m = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        theta.iter().chain(theta.iter()).map(|&x| Complex64::new(x, 0.0)),
    ));
    omegas
        .iter()
        .map(|&w| {
            let phi_hat = CMat::from_fn(n, n, |i, j| {
                spec.entry(i, j).iter().map(|t| t.fourier(w)).sum::<Complex64>()
            });
            let a = CMat::identity(n, n) - phi_hat;
            let inv = a
                .try_inverse()
                .ok_or_else(|| Error::Singular(format!("I - Phi_hat({w}) is singular")))?;
            let g = &proj * inv;
            Ok(&g * &m * g.adjoint())
        })
        .collect()
}

/// Volume-unit kernel `K(t) = Λ D (I − ∫φ)^{-1} (I − ∫_0^t φ) D^{-1}`, `D = diag(v)`.
pub fn analytic_kernel_at(spec: &HawkesSpec, lambda: &Mat, t: f64) -> Result<Mat> {
    let d = spec.d();
    if lambda.shape() != (d, d) {
        return Err(Error::InvalidInput(format!("Lambda must be {d}x{d}")));
    }
    let dv = Mat::from_diagonal(&DVector::from_vec(spec.sizes.clone()));
    let dv_inv = Mat::from_diagonal(&DVector::from_iterator(d, spec.sizes.iter().map(|v| 1.0 / v)));
    let resolvent = (Mat::identity(d, d) - spec.imbalance_integral(f64::INFINITY))
        .try_inverse()
        .ok_or_else(|| Error::Singular("I - integral of phi is singular".into()))?;
    let partial = Mat::identity(d, d) - spec.imbalance_integral(t);
    Ok(lambda * dv * resolvent * partial * dv_inv)
}

/// Closed-form kernel sampled at lags `τΔ`, `τ = 0..=tau_max`.
pub fn analytic_kernel(
    spec: &HawkesSpec,
    lambda: &Mat,
    delta: f64,
    tau_max: usize,
) -> Result<ImpactKernel> {
    let report = validate_spec(spec);
    if !report.martingale_compatible {
        return Err(Error::InvalidInput(format!(
            "spec is not martingale-compatible: {}",
            report.messages.join("; ")
        )));
    }
    if lambda.clone().try_inverse().is_none() {
        return Err(Error::Singular("Lambda is not invertible".into()));
    }
    let values = (0..=tau_max)
        .map(|k| analytic_kernel_at(spec, lambda, k as f64 * delta))
        .collect::<Result<Vec<_>>>()?;
    Ok(ImpactKernel {
        delta,
        k0: values[0].clone(),
        lambda: lambda.clone(),
        values,
        provenance: Provenance::Analytic,
        grid: crate::DEFAULT_GRID,
    })
}

/// Price path `p(t) = p0 + Σ_{events s ≤ t} K(t − s) q_s` sampled every `interval`
/// seconds, with the analytic kernel. Uses one exponential state per imbalance term.
pub fn simulate_prices(
    spec: &HawkesSpec,
    stream: &EventStream,
    lambda: &Mat,
    p0: &[f64],
    interval: f64,
) -> Result<crate::observables::PricePath> {
    let d = spec.d();
    if p0.len() != d {
        return Err(Error::InvalidInput(format!("p0 must have length {d}")));
    }
    if !(interval > 0.0) {
        return Err(Error::InvalidInput("price interval must be positive".into()));
    }
    let dv = Mat::from_diagonal(&DVector::from_vec(spec.sizes.clone()));
    let resolvent = (Mat::identity(d, d) - spec.imbalance_integral(f64::INFINITY))
        .try_inverse()
        .ok_or_else(|| Error::Singular("I - integral of phi is singular".into()))?;
    let front = lambda * &dv * resolvent;
    let phi = spec.imbalance_kernel();
    // (i, j, α/β, β, state) with state = Σ_{s ≤ t} e^{-β(t-s)} dN^{signed}_j(s)
    let mut terms: Vec<(usize, usize, f64, f64, f64)> = Vec::new();
    for i in 0..d {
        for j in 0..d {
            for t in &phi[i][j] {
                terms.push((i, j, t.l1(), t.beta, 0.0));
            }
        }
    }
    let mut volume = DVector::<f64>::zeros(d);
    let mut last = 0.0;
    let mut times = Vec::new();
    let mut prices = Vec::new();
    let n_steps = (stream.horizon / interval).floor() as usize;
    let mut ev = stream.events.iter().peekable();
    let p0v = DVector::from_column_slice(p0);
    for k in 0..=n_steps {
        let tk = k as f64 * interval;
        while let Some(e) = ev.next_if(|e| e.time <= tk) {
            for term in terms.iter_mut() {
                term.4 *= (-term.3 * (e.time - last)).exp();
            }
            last = e.time;
            let s = e.side.sign();
            volume[e.asset] += s * e.size;
            for term in terms.iter_mut().filter(|t| t.1 == e.asset) {
                term.4 += s;
            }
        }
        // tail of the imbalance kernel, counts space
        let mut tail = DVector::<f64>::zeros(d);
        for term in &terms {
            tail[term.0] += term.2 * term.4 * (-term.3 * (tk - last)).exp();
        }
        let p = &p0v + lambda * &volume + &front * tail;
        times.push(tk);
        prices.push(p.iter().copied().collect());
    }
    Ok(crate::observables::PricePath { times, prices })
}
