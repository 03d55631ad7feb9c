//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use crossimpact::hawkes::{stationary_intensity, ExpTerm, HawkesSpec};
use crossimpact::linalg::{ifft_matrices, CMat, Mat};
use crossimpact::observables::{omega_aggregates, ObservableSet, Taper};
use nalgebra::DVector;
use num_complex::Complex64;

/// Two-asset spec with sizes (1, 2), cross terms chosen so that `D ‖φ‖ D^{-1}` is
/// symmetric, no buy/sell cross excitation.
pub fn symmetric_two_asset() -> HawkesSpec {
    let mut s = HawkesSpec::poisson(vec![0.4, 0.25], vec![1.0, 2.0]);
    let block = vec![
        vec![vec![ExpTerm::new(0.3 * 0.8, 0.8)], vec![ExpTerm::new(0.2 * 0.6, 0.6)]],
        vec![vec![ExpTerm::new(0.05 * 1.2, 1.2)], vec![ExpTerm::new(0.25, 0.5), ExpTerm::new(0.15 * 1.5, 1.5)]],
    ];
    s.phi.aa = block.clone();
    s.phi.bb = block;
    s
}

/// `Λ = c (I + b A)` with `A = D ‖φ‖ D^{-1}`; commutes with `(I − A)^{-1}`.
pub fn commuting_lambda(spec: &HawkesSpec, c: f64, b: f64) -> Mat {
    let d = spec.d();
    let dv = Mat::from_diagonal(&DVector::from_vec(spec.sizes.clone()));
    let dinv = dv.clone().try_inverse().unwrap();
    let a = &dv * spec.imbalance_integral(f64::INFINITY) * dinv;
    (Mat::identity(d, d) + a * b) * c
}

/// Lag covariances of the bin-integrated image of the Hawkes model: the lattice
/// kernel carries the mass `∫_{kΔ}^{(k+1)Δ} Φ` at lag `k` (including the
/// within-bin mass at lag 0) and the innovations are white with `diag(θ, θ) Δ`.
pub fn lattice_image_lags(spec: &HawkesSpec, delta: f64, tau_max: usize, n_fft: usize) -> Vec<Mat> {
    let d = spec.d();
    let n = 2 * d;
    let theta = stationary_intensity(spec).unwrap();
    let mut proj = CMat::zeros(d, n);
    for i in 0..d {
        proj[(i, i)] = Complex64::new(spec.sizes[i], 0.0);
        proj[(i, i + d)] = Complex64::new(-spec.sizes[i], 0.0);
    }
    let noise = CMat::from_diagonal(&DVector::from_iterator(
        n,
        theta.iter().chain(theta.iter()).map(|&t| Complex64::new(t * delta, 0.0)),
    ));
    let samples: Vec<CMat> = (0..n_fft)
        .map(|k| {
            let w = 2.0 * std::f64::consts::PI * k as f64 / n_fft as f64;
            let zinv = Complex64::from_polar(1.0, -w);
            let phi = CMat::from_fn(n, n, |i, j| {
                spec.entry(i, j)
                    .iter()
                    .map(|t| {
                        let r = (-t.beta * delta).exp();
                        Complex64::new(t.alpha / t.beta * (1.0 - r), 0.0) / (1.0 - zinv * r)
                    })
                    .sum::<Complex64>()
            });
            let g = &proj * (CMat::identity(n, n) - phi).try_inverse().unwrap();
            &g * &noise * g.adjoint()
        })
        .collect();
    ifft_matrices(&samples)
        .into_iter()
        .take(tau_max + 1)
        .map(|m| m.map(|z| z.re))
        .collect()
}

/// Observables whose K¹ is, exactly, the closed-form kernel on the lattice.
pub fn analytic_observables(spec: &HawkesSpec, lambda: &Mat, delta: f64, tau_max: usize) -> ObservableSet {
    let d = spec.d();
    let theta = stationary_intensity(spec).unwrap();
    let omega = lattice_image_lags(spec, delta, tau_max, 1 << 14);
    let (_, omega_inf) = omega_aggregates(&omega, Taper::Raw).unwrap();
    let atom = Mat::from_fn(d, d, |i, j| {
        if i == j {
            2.0 * theta[i] * spec.sizes[i] * spec.sizes[i] * delta
        } else {
            0.0
        }
    });
    let sigma = lambda * &omega_inf * lambda.transpose() * 2.0;
    ObservableSet {
        delta,
        taper: Taper::Raw,
        sigma,
        omega,
        omega_zero: atom,
        omega_inf,
        n_days: 1,
        n_bins: 0,
    }
}

/// Largest modulus of the lattice poles `e^{-βΔ}` and of the resolvent.
pub fn max_rate(spec: &HawkesSpec, delta: f64) -> f64 {
    let d = spec.d();
    let mut r: f64 = 0.0;
    for i in 0..2 * d {
        for j in 0..2 * d {
            for t in spec.entry(i, j) {
                r = r.max((-t.beta * delta).exp());
            }
        }
    }
    r
}

/// Relative sup-norm difference between two matrix sequences.
pub fn rel_sup(a: &[Mat], b: &[Mat]) -> f64 {
    let scale = b.iter().map(|m| m.amax()).fold(0.0, f64::max);
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).amax())
        .fold(0.0, f64::max)
        / scale
}

/// Exact spectrum of the flow binned at width `delta` at lattice frequencies
/// `thetas`: the continuous spectrum aliased through the box-car window. The white
/// floor `diag(2θv²)` is handled in closed form; the smooth remainder is summed over
/// `|j| ≤ n_alias` replicas.
pub fn binned_flow_spectrum(spec: &HawkesSpec, delta: f64, thetas: &[f64], n_alias: i64) -> Vec<CMat> {
    use crossimpact::hawkes::analytic_flow_spectrum;
    let d = spec.d();
    let theta = stationary_intensity(spec).unwrap();
    let white = CMat::from_diagonal(&DVector::from_iterator(
        d,
        (0..d).map(|i| Complex64::new(2.0 * theta[i] * spec.sizes[i] * spec.sizes[i], 0.0)),
    ));
    thetas
        .iter()
        .map(|&th| {
            let nus: Vec<f64> = (-n_alias..=n_alias)
                .map(|j| (th + 2.0 * std::f64::consts::PI * j as f64) / delta)
                .collect();
            let spectra = analytic_flow_spectrum(spec, &nus).unwrap();
            let mut s = &white * Complex64::new(delta, 0.0);
            for (nu, sp) in nus.iter().zip(spectra) {
                let window = if nu.abs() < 1e-12 {
                    delta * delta
                } else {
                    (2.0 * (nu * delta / 2.0).sin() / nu).powi(2)
                };
                s += (sp - &white) * Complex64::new(window / delta, 0.0);
            }
            s
        })
        .collect()
}

/// Minimum-phase factor by root splitting: roots of `z^m a(z)` inside the unit
/// circle give `p(z) = c Π (1 − r z^{-1})`, with `c` fixed by the lag-0 coefficient.
pub fn root_split_factor(a: &[f64]) -> Vec<f64> {
    let m = a.len() - 1;
    if m == 0 {
        return vec![a[0].sqrt()];
    }
    // palindromic coefficients of z^m a(z), highest power first
    let mut poly: Vec<f64> = (0..=2 * m).map(|k| a[(k as isize - m as isize).unsigned_abs()]).collect();
    let lead = poly[0];
    poly.iter_mut().for_each(|c| *c /= lead);
    let deg = 2 * m;
    let comp = Mat::from_fn(deg, deg, |i, j| {
        if i == 0 {
            -poly[j + 1]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let mut roots: Vec<Complex64> = comp.complex_eigenvalues().iter().copied().filter(|r| r.norm() < 1.0).collect();
    roots.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    assert_eq!(roots.len(), m, "spectrum touches the unit circle");
    let mut q = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); q.len() + 1];
        for (k, c) in q.iter().enumerate() {
            next[k] += c;
            next[k + 1] -= c * r;
        }
        q = next;
    }
    let q: Vec<f64> = q.iter().map(|c| c.re).collect();
    let c = (a[0] / q.iter().map(|x| x * x).sum::<f64>()).sqrt();
    q.iter().map(|x| c * x).collect()
}

/// Symmetric `M` with `M c M = ½Σ` for 2×2 inputs by damped Newton on the three
/// free entries, started from a positive multiple of the identity.
pub fn kyle_newton_2x2(sigma: &Mat, c: &Mat) -> Mat {
    let build = |x: &[f64; 3]| Mat::from_row_slice(2, 2, &[x[0], x[1], x[1], x[2]]);
    let resid = |x: &[f64; 3]| {
        let m = build(x);
        let r = &m * c * &m - sigma * 0.5;
        [r[(0, 0)], r[(0, 1)], r[(1, 1)]]
    };
    let s = (0.5 * sigma.trace() / c.trace()).sqrt();
    let mut x = [s, 0.0, s];
    for _ in 0..200 {
        let f = resid(&x);
        let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-15 * sigma.norm() {
            break;
        }
        let mut jac = Mat::zeros(3, 3);
        for k in 0..3 {
            let h = 1e-7 * x.iter().map(|v| v.abs()).fold(1e-3, f64::max);
            let mut xp = x;
            xp[k] += h;
            let mut xm = x;
            xm[k] -= h;
            let (fp, fm) = (resid(&xp), resid(&xm));
            for r in 0..3 {
                jac[(r, k)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        let step = jac.lu().solve(&nalgebra::DVector::from_column_slice(&f)).expect("Jacobian singular");
        let mut t = 1.0;
        loop {
            let trial = [x[0] - t * step[0], x[1] - t * step[1], x[2] - t * step[2]];
            let fn_ = resid(&trial).iter().map(|v| v * v).sum::<f64>().sqrt();
            if fn_ < norm || t < 1e-6 {
                x = trial;
                break;
            }
            t *= 0.5;
        }
    }
    build(&x)
}

/// Gauss–Legendre nodes and weights on `[0, 1]` (Golub–Welsch).
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let j = Mat::from_fn(n, n, |i, k| {
        if i.abs_diff(k) == 1 {
            let m = i.max(k) as f64;
            m / (4.0 * m * m - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let e = nalgebra::SymmetricEigen::new(j);
    let mut nw: Vec<(f64, f64)> = (0..n)
        .map(|k| (0.5 * (e.eigenvalues[k] + 1.0), e.eigenvectors[(0, k)].powi(2)))
        .collect();
    nw.sort_by(|a, b| a.0.total_cmp(&b.0));
    nw
}

/// `∫_0^T ∫_0^t f(t)^T g(t − s) f(s) ds dt` for rates constant on a uniform grid of
/// width `h`, kernel smooth between multiples of `h`. Every grid square is split
/// along its diagonal so the integrand is smooth on each triangle.
pub fn triangle_cost<F: Fn(f64) -> Mat>(rates: &[Vec<f64>], h: f64, g: F, nodes: usize) -> f64 {
    let gl = gauss_legendre(nodes);
    let d = rates.len();
    let n = rates[0].len();
    // ∫ over the triangle {0 ≤ y ≤ x ≤ h} of g(offset + x − y) and its complement
    let tri = |offset: f64, upper: bool| -> Mat {
        let mut acc = Mat::zeros(d, d);
        for &(u, wu) in &gl {
            for &(v, wv) in &gl {
                let x = h * u;
                let y = x * v;
                let w = wu * wv * h * x;
                let lag = if upper { offset - (x - y) } else { offset + (x - y) };
                acc += g(lag) * w;
            }
        }
        acc
    };
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..=i {
            let off = (i - j) as f64 * h;
            let mut block = tri(off, false);
            if i > j {
                block += tri(off, true);
            }
            for a in 0..d {
                for b in 0..d {
                    total += rates[a][i] * rates[b][j] * block[(a, b)];
                }
            }
        }
    }
    total
}

/// Two assets, the first ten times more active, long-memory self-excitation.
pub fn liquid_illiquid_market() -> HawkesSpec {
    let mut s = HawkesSpec::poisson(vec![1.0, 0.1], vec![1.0, 1.0]);
    let own = || vec![ExpTerm::new(0.3 * 2.0, 2.0), ExpTerm::new(0.4 * 0.05, 0.05)];
    let cross = || vec![ExpTerm::new(0.1 * 0.5, 0.5)];
    let block = vec![vec![own(), cross()], vec![cross(), own()]];
    s.phi.aa = block.clone();
    s.phi.bb = block;
    s
}

/// Observables of the binned-lattice flow model with a price covariance of the
/// given volatilities and correlation; `Ω(0)` is the lag-0 covariance.
pub fn market_observables(spec: &HawkesSpec, vols: [f64; 2], rho: f64, tau_max: usize) -> ObservableSet {
    let omega = lattice_image_lags(spec, 1.0, tau_max, 1 << 14);
    let (omega_zero, omega_inf) = omega_aggregates(&omega, Taper::Raw).unwrap();
    let c = rho * vols[0] * vols[1];
    let sigma = Mat::from_row_slice(2, 2, &[vols[0] * vols[0], c, c, vols[1] * vols[1]]);
    ObservableSet { delta: 1.0, taper: Taper::Raw, sigma, omega, omega_zero, omega_inf, n_days: 1, n_bins: 0 }
}
