mod common;

use common::*;
use crossimpact::hawkes::analytic_kernel;
use crossimpact::kernels::{
    build_k1, compute_k0, compute_lambda, kyle_matrix, kyle_matrix_with, nsa_check, regularize_k2,
    transient_spectrum, Factorization,
};
use crossimpact::linalg::{herm_min_eig, min_eig_sym, CMat, Mat};
use crossimpact::observables::{ObservableSet, Taper};
use crossimpact::polymat::factorize;
use crossimpact::{ImpactKernel, Provenance};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> Mat {
    let a = Mat::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + Mat::identity(d, d) * 0.05
}

fn rel(a: &Mat, b: &Mat) -> f64 {
    (a - b).norm() / b.norm()
}

fn scalar_obs(sigma: f64, lags: &[f64]) -> ObservableSet {
    let omega: Vec<Mat> = lags.iter().map(|&v| Mat::from_element(1, 1, v)).collect();
    let inf = lags[0] + 2.0 * lags[1..].iter().sum::<f64>();
    ObservableSet {
        delta: 1.0,
        taper: Taper::Raw,
        sigma: Mat::from_element(1, 1, sigma),
        omega_zero: omega[0].clone(),
        omega,
        omega_inf: Mat::from_element(1, 1, inf),
        n_days: 1,
        n_bins: 0,
    }
}

#[test]
fn kyle_identity_holds_for_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for d in [1, 2, 3, 5] {
        for _ in 0..100 {
            let sigma = random_spd(&mut rng, d);
            let c = random_spd(&mut rng, d);
            let m = kyle_matrix(&sigma, &c).unwrap();
            assert!((&m - m.transpose()).norm() <= 1e-12 * m.norm());
            assert!(min_eig_sym(&m) >= -1e-12 * m.norm());
            assert!(rel(&(&m * &c * &m), &(&sigma * 0.5)) <= 1e-10);
            let m2 = kyle_matrix_with(&sigma, &c, Factorization::SymmetricSqrt).unwrap();
            assert!(rel(&m2, &m) <= 1e-10);
        }
    }
}

#[test]
fn kyle_agrees_with_a_nonlinear_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let sigma = random_spd(&mut rng, 2);
        let c = random_spd(&mut rng, 2);
        let oracle = kyle_newton_2x2(&sigma, &c);
        assert!(min_eig_sym(&oracle) > 0.0, "Newton left the PSD cone");
        let m = kyle_matrix(&sigma, &c).unwrap();
        assert!(rel(&m, &oracle) <= 1e-8, "{m} vs {oracle}");
    }
}

#[test]
fn kyle_rejects_indefinite_inputs() {
    let bad = Mat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    assert!(kyle_matrix(&Mat::identity(2, 2), &bad).is_err());
    assert!(kyle_matrix(&bad, &Mat::identity(2, 2)).is_err());
}

#[test]
fn boundary_matrices_in_simple_cases() {
    // white single asset: Σ = 4, Ω(0) = 2 gives K(0) = 1 and Λ = K(0)
    let obs = scalar_obs(4.0, &[2.0, 0.0]);
    assert!((compute_k0(&obs).unwrap()[(0, 0)] - 1.0).abs() < 1e-14);
    assert!((compute_lambda(&obs).unwrap()[(0, 0)] - 1.0).abs() < 1e-14);
    // decoupled assets: entries (1/√2)√(Σ_ii/Ω_ii)
    let mut o2 = market_observables(&liquid_illiquid_market(), [1.0, 1.0], 0.0, 4);
    o2.sigma = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 5.0]));
    o2.omega_zero = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 0.5]));
    let k0 = compute_k0(&o2).unwrap();
    assert!((k0[(0, 0)] - (1.5f64).sqrt() / 2f64.sqrt()).abs() < 1e-14);
    assert!((k0[(1, 1)] - (10.0f64).sqrt() / 2f64.sqrt()).abs() < 1e-14);
    assert!(k0[(0, 1)].abs() < 1e-14);
}

#[test]
fn persistent_flow_lowers_permanent_impact() {
    let sigma = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0]));
    let c0 = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0]));
    let cinf = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.5]));
    let k0 = kyle_matrix(&sigma, &c0).unwrap();
    let l = kyle_matrix(&sigma, &cinf).unwrap();
    assert!(l[(0, 0)] < k0[(0, 0)] && l[(1, 1)] < k0[(1, 1)]);
    let l1 = kyle_matrix(&Mat::from_element(1, 1, 5.0), &Mat::from_element(1, 1, 2.0)).unwrap();
    assert!((l1[(0, 0)] - (5.0f64 / 2.0).sqrt() / 2f64.sqrt()).abs() < 1e-14);
}

#[test]
fn white_flow_gives_a_flat_kernel() {
    let obs = market_observables(&liquid_illiquid_market(), [1.0, 1.2], 0.5, 3);
    let mut white = obs.clone();
    for m in white.omega.iter_mut().skip(1) {
        m.fill(0.0);
    }
    white.omega_inf = white.omega_zero.clone();
    let f = factorize(&white.to_laurent(), 1e-12, 100, 256).unwrap();
    let (k, _) = build_k1(&white, &f, 256, 1e-3).unwrap();
    for v in &k.values {
        assert!(rel(v, &k.lambda) < 1e-12);
    }
    assert!(rel(&k.k0, &k.lambda) < 1e-12);
}

#[test]
fn k1_matches_the_closed_form_on_a_hawkes_spectrum() {
    let spec = symmetric_two_asset();
    let lambda = commuting_lambda(&spec, 0.01, 0.5);
    let obs = analytic_observables(&spec, &lambda, 1.0, 128);
    let f = factorize(&obs.to_laurent(), 1e-12, 20_000, 4096).unwrap();
    let (k1, diag) = build_k1(&obs, &f, 4096, 1e-3).unwrap();
    let truth = analytic_kernel(&spec, &lambda, 1.0, 128).unwrap();
    assert!(rel_sup(&k1.values, &truth.values) <= 1e-4);
    assert_eq!(k1.k0, compute_k0(&obs).unwrap());
    assert_eq!(k1.lambda, compute_lambda(&obs).unwrap());
    assert!(diag.tail_mismatch <= 1e-3);
    assert!(diag.rotation_residual <= 1e-6);
    assert_eq!(k1.provenance, Provenance::K1);
}

#[test]
fn single_asset_k1_matches_a_direct_scalar_construction() {
    // MA(2) flow q = s (e_t + b1 e_{t-1} + b2 e_{t-2}) with a minimum-phase polynomial
    let (s, b1, b2) = (1.3, 0.6, 0.2);
    let p = [s, s * b1, s * b2];
    let lags = [p[0] * p[0] + p[1] * p[1] + p[2] * p[2], p[0] * p[1] + p[1] * p[2], p[0] * p[2], 0.0];
    let sigma = 0.7;
    let obs = scalar_obs(sigma, &lags);
    let f = factorize(&obs.to_laurent(), 1e-12, 100, 1024).unwrap();
    let (k, _) = build_k1(&obs, &f, 1024, 1e-3).unwrap();
    // g = Λ p(1) / p(z), K(τ) = Σ_{k<τ} g_k
    let p1: f64 = p.iter().sum();
    let lam = (0.5 * sigma / (p1 * p1)).sqrt();
    let mut inv = vec![0.0; 4];
    for n in 0..4 {
        let mut v = if n == 0 { 1.0 } else { 0.0 };
        for j in 1..=2.min(n) {
            v -= p[j] * inv[n - j];
        }
        inv[n] = v / p[0];
    }
    let mut acc = 0.0;
    for tau in 1..4 {
        acc += lam * p1 * inv[tau - 1];
        assert!((k.values[tau][(0, 0)] - acc).abs() <= 1e-6 * lam, "lag {tau}");
    }
    assert!((k.k0[(0, 0)] - (0.5 * sigma / lags[0]).sqrt()).abs() < 1e-12);
}

#[test]
fn clipping_leaves_admissible_kernels_unchanged() {
    let values: Vec<Mat> = (0..64).map(|t| Mat::identity(2, 2) * (-(t as f64) / 4.0).exp() + Mat::identity(2, 2) * 0.1).collect();
    let k = ImpactKernel::from_values(values, Mat::identity(2, 2) * 0.1, 1.0);
    let (k2, rep) = regularize_k2(&k).unwrap();
    assert!(rep.min_eig_before >= 0.0);
    for t in 0..k2.values.len() {
        assert!((&k2.values[t] - k.lag(t)).norm() < 1e-12, "lag {t}");
    }
    assert!(rep.spectral_distance < 1e-12);
}

/// Scalar kernel whose transient spectrum `1 + 1.8 cos ω` dips below zero.
fn dip_kernel() -> ImpactKernel {
    let lambda = Mat::from_element(1, 1, 0.5);
    let mut values = vec![Mat::from_element(1, 1, 1.5), Mat::from_element(1, 1, 1.4)];
    values.extend((0..6).map(|_| lambda.clone()));
    ImpactKernel::from_values(values, lambda, 1.0)
}

#[test]
fn scalar_clipping_is_the_pointwise_positive_part() {
    let k = dip_kernel();
    let n = k.spectral_grid();
    let before = transient_spectrum(&k, n).unwrap();
    let (k2, rep) = regularize_k2(&k).unwrap();
    let after = transient_spectrum(&k2, n).unwrap();
    let mut neg_mass = 0.0;
    for (k, (b, a)) in before.iter().zip(&after).enumerate() {
        let w = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let z = 1.0 + 1.8 * w.cos();
        assert!((b[(0, 0)].re - z).abs() < 1e-12);
        assert!((a[(0, 0)].re - z.max(0.0)).abs() < 1e-12, "frequency {k}");
        neg_mass += z.min(0.0).powi(2);
    }
    assert!((rep.spectral_distance - neg_mass.sqrt()).abs() < 1e-9 * neg_mass.sqrt());
    assert!(rep.min_eig_before < 0.0 && rep.min_eig_after > -1e-12);
}

#[test]
fn clipping_is_the_nearest_psd_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let values: Vec<Mat> = (0..4).map(|_| Mat::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0))).collect();
    let mut k = ImpactKernel::from_values(values, Mat::zeros(2, 2), 1.0);
    k.k0 = crossimpact::linalg::symmetrize(&k.k0);
    k.values[0] = k.k0.clone();
    k.grid = 8;
    let n = k.spectral_grid();
    let (k2, _) = regularize_k2(&k).unwrap();
    let s1 = transient_spectrum(&k, n).unwrap();
    let s2 = transient_spectrum(&k2, n).unwrap();
    let half = Complex64::new(0.5, 0.0);
    for (z1, z2) in s1.iter().zip(&s2) {
        let h1 = (z1 + z1.adjoint()) * half;
        let x = (z2 + z2.adjoint()) * half;
        // projection certificate: X ⪰ 0, X − S ⪰ 0, ⟨X, X − S⟩ = 0
        let gap = &x - &h1;
        assert!(herm_min_eig(&x) > -1e-12);
        assert!(herm_min_eig(&gap) > -1e-12);
        assert!(x.dotc(&gap).norm() < 1e-12);
        // and no random PSD candidate is closer
        let best = (&x - &h1).norm();
        for _ in 0..200 {
            let b = CMat::from_fn(2, 2, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let cand = &b * b.adjoint() * Complex64::new(rng.random_range(0.0..2.0), 0.0);
            assert!((&cand - &h1).norm() >= best - 1e-12);
        }
        // the anti-Hermitian part is untouched
        assert!(((z1 - z1.adjoint()) - (z2 - z2.adjoint())).norm() < 1e-12);
    }
}

#[test]
fn clipping_is_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut values: Vec<Mat> = (0..24).map(|_| Mat::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0))).collect();
    values[0] = crossimpact::linalg::symmetrize(&values[0]);
    let mut k = ImpactKernel::from_values(values, Mat::identity(3, 3) * 0.2, 1.0);
    k.grid = 64;
    let (k2, _) = regularize_k2(&k).unwrap();
    let (k3, _) = regularize_k2(&k2).unwrap();
    for (a, b) in k2.values.iter().zip(&k3.values) {
        assert!((a - b).amax() <= 1e-12);
    }
}

const TAU: usize = 64;

#[test]
fn calibrated_k1_fails_and_k2_passes_on_a_long_memory_market() {
    let spec = liquid_illiquid_market();
    let obs = market_observables(&spec, [1.0, 1.2], 0.9, TAU);
    let f = factorize(&obs.to_laurent(), 1e-12, 20_000, 4096).unwrap();
    let (k1, _) = build_k1(&obs, &f, 4096, 1.0).unwrap();
    let r1 = nsa_check(&k1, 1e-8).unwrap();
    assert!(!r1.verdict && r1.k0_symmetric && !r1.spectrum_psd, "{r1:?}");
    assert_eq!(r1.label, "necessary-conditions fail");
    let (k2, _) = regularize_k2(&k1).unwrap();
    let r2 = nsa_check(&k2, 1e-8).unwrap();
    assert!(r2.verdict, "{r2:?}");
    assert_eq!(r2.label, "necessary-conditions pass");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn kyle_invariants(seed in 0u64..100_000, d in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = random_spd(&mut rng, d);
        let c = random_spd(&mut rng, d);
        let m = kyle_matrix(&sigma, &c).unwrap();
        prop_assert!((&m - m.transpose()).norm() <= 1e-12 * m.norm());
        prop_assert!(rel(&(&m * &c * &m), &(&sigma * 0.5)) <= 1e-10);
        let m2 = kyle_matrix_with(&sigma, &c, Factorization::SymmetricSqrt).unwrap();
        prop_assert!(rel(&m2, &m) <= 1e-10);
    }

    #[test]
    fn clipping_removes_all_negative_mass(seed in 0u64..100_000, tau_max in 2usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values: Vec<Mat> = (0..=tau_max).map(|_| Mat::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0))).collect();
        values[0] = crossimpact::linalg::symmetrize(&values[0]);
        let mut k = ImpactKernel::from_values(values, Mat::zeros(2, 2), 1.0);
        k.grid = 64;
        let (k2, rep) = regularize_k2(&k).unwrap();
        let check = nsa_check(&k2, 1e-10).unwrap();
        prop_assert!(check.min_eig >= -1e-10 * check.spectral_scale);
        prop_assert!(rep.min_eig_after >= -1e-10 * check.spectral_scale);
        prop_assert_eq!(k2.provenance, Provenance::K2);
    }
}
