use std::f64::consts::PI;

use euvq_core::absorption::{beta_bound, beta_limit};
use euvq_core::linalg::{CMatrix, I};
use euvq_core::spectro::*;
use euvq_core::units::cross_section_prefactor;
use euvq_core::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dense_solve_greens(s: &SpectralScene, omega: f64, gamma: f64) -> Complex64 {
    let dim = s.dim();
    let shift = Complex64::new(-s.ground_energy() - omega, gamma);
    let a = s.hamiltonian() + CMatrix::identity(dim, dim) * shift;
    let dpsi = s.dipole() * s.ground_state();
    let x = a.lu().solve(&dpsi).unwrap();
    dpsi.dotc(&x)
}

fn random_fragment(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let a = CMatrix::from_fn(dim, dim, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    (&a + a.adjoint()) * Complex64::from(0.25)
}

#[test]
fn zero_dipole_gives_zero() {
    let h = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![Complex64::from(0.0), Complex64::from(1.0)]));
    let s = SpectralScene::new(h, CMatrix::zeros(2, 2)).unwrap();
    assert_eq!(exact_greens(&s, 0.7, 0.1).unwrap(), Complex64::from(0.0));
    assert_eq!(kramers_heisenberg(&s, 0.7, 0.1).unwrap(), 0.0);
    assert_eq!(dipole_excited_norm(&s), 0.0);
    let w = fourier_weights(0.7, 0.1, 0.3, 10).unwrap();
    let shot = hadamard_shot_simulator(&s, &w, 100, 0).unwrap();
    assert_eq!(shot.estimate, 0.0);
}

#[test]
fn identity_dipole_norm() {
    let s = SpectralScene::random(5, 1).unwrap();
    let id = CMatrix::identity(5, 5);
    let t = SpectralScene::with_ground_state(s.hamiltonian().clone(), id, s.ground_state().clone()).unwrap();
    assert!((dipole_excited_norm(&t) - 1.0).abs() < 1e-14);
}

#[test]
fn dipole_norm_quadratic_form() {
    let s = SpectralScene::random(12, 2).unwrap();
    let psi = s.ground_state();
    let q = psi.dotc(&(s.dipole() * s.dipole() * psi)).re;
    assert!((dipole_excited_norm(&s) - q.sqrt()).abs() < 1e-12);
}

#[test]
fn greens_matches_dense_solve() {
    let s = SpectralScene::random(64, 3).unwrap();
    for &omega in &[0.1, 0.5, 1.3, 2.0] {
        let a = exact_greens(&s, omega, 0.05).unwrap();
        let b = dense_solve_greens(&s, omega, 0.05);
        assert!((a - b).norm() <= 1e-10 * b.norm().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn gamma_must_be_positive() {
    let s = SpectralScene::two_level(1.0, 1.0).unwrap();
    assert!(exact_greens(&s, 1.0, 0.0).is_err());
    assert!(exact_greens(&s, 1.0, -1.0).is_err());
}

#[test]
fn two_level_kramers_heisenberg_closed_form() {
    let (gap, d, g) = (0.8, 0.4, 0.03);
    let s = SpectralScene::two_level(gap, d).unwrap();
    for &omega in &[0.5, 0.8, 0.9] {
        let want = cross_section_prefactor(omega) * d * d * g / ((gap - omega).powi(2) + g * g);
        assert!((kramers_heisenberg(&s, omega, g).unwrap() - want).abs() < 1e-12 * want);
    }
}

#[test]
fn lorentzian_consistency_and_positivity() {
    for seed in 0..10 {
        let s = SpectralScene::random(16 + seed as usize, seed).unwrap();
        for k in 0..40 {
            let omega = -1.0 + 0.1 * k as f64;
            let g = exact_greens(&s, omega, 0.07).unwrap();
            assert!(-g.im >= 0.0);
            let kh = kramers_heisenberg(&s, omega, 0.07).unwrap();
            let want = cross_section_prefactor(omega) * -g.im;
            assert!((kh - want).abs() <= 1e-9 * want.abs().max(1e-3));
        }
    }
}

#[test]
fn weights_formula_and_beta() {
    let w = fourier_weights(3.38, 0.0676, PI / 8.0, 200).unwrap();
    let ratio = w.p(200).unwrap().norm() / w.p(0).unwrap().norm();
    assert!((ratio - (-200.0 * 0.0676 * PI / 8.0f64).exp()).abs() < 1e-15);
    assert!((w.beta - beta_bound(PI / 8.0, 0.0676, 200).unwrap()).abs() < 1e-12 * w.beta);
    let arg = w.p(3).unwrap().arg();
    assert!((arg - (3.38 * PI / 8.0 * 3.0 - 2.0 * PI)).abs() < 1e-12);
    assert_eq!(w.weights().len(), 401);
}

#[test]
fn single_weight_at_zero_cutoff() {
    let w = fourier_weights(1.0, 0.1, 0.5, 0).unwrap();
    assert_eq!(w.weights().len(), 1);
    assert!((w.beta - 0.5 / (2.0 * PI)).abs() < 1e-15);
    let s = SpectralScene::random(8, 4).unwrap();
    let n = dipole_excited_norm(&s);
    assert!((td_correlator(&s, &w) - 0.5 / (2.0 * PI) * n * n).abs() < 1e-13);
}

#[test]
fn beta_series_approaches_coth() {
    let tau = 0.5;
    let gamma = 0.1 / tau;
    let w = fourier_weights(0.0, gamma, tau, 1000).unwrap();
    let lim = beta_limit(tau, gamma).unwrap();
    assert!(w.beta <= lim);
    assert!((w.beta - lim).abs() < 1e-3 * lim);
}

fn explicit_correlator(s: &SpectralScene, w: &FourierWeights) -> Complex64 {
    let mut acc = Complex64::from(0.0);
    for (de, wt) in s.transitions() {
        for j in -(w.j_max as i64)..=(w.j_max as i64) {
            acc += w.p(j).unwrap() * (-I * de * w.tau * j as f64).exp() * wt;
        }
    }
    acc
}

#[test]
fn closed_form_sums_match_explicit_sums() {
    let s = SpectralScene::random(10, 5).unwrap();
    let w = fourier_weights(0.6, 0.05, 0.4, 300).unwrap();
    let exp = explicit_correlator(&s, &w);
    assert!(exp.im.abs() < 1e-10);
    assert!((td_correlator(&s, &w) - exp.re).abs() < 1e-10);
    // causal half
    let mut causal = Complex64::from(0.0);
    for (de, wt) in s.transitions() {
        causal += w.p(0).unwrap() * 0.5 * wt;
        for j in 1..=w.j_max as i64 {
            causal += w.p(-j).unwrap() * (I * de * w.tau * j as f64).exp() * wt;
        }
    }
    causal *= -2.0 * PI * I;
    assert!((td_greens(&s, &w) - causal).norm() < 1e-10);
    assert!((td_greens(&s, &w).im + PI * td_correlator(&s, &w)).abs() < 1e-10);
}

#[test]
fn truncation_bounds_hold() {
    let s = SpectralScene::random(20, 6).unwrap();
    let n2 = dipole_excited_norm(&s).powi(2);
    for &(gamma, tau) in &[(0.05, 0.2), (0.1, 0.5), (0.02, 0.1)] {
        let far = fourier_weights(0.9, gamma, tau, 200_000).unwrap();
        for &j in &[5u64, 50, 200] {
            let w = fourier_weights(0.9, gamma, tau, j).unwrap();
            let dc = (td_correlator(&s, &w) - td_correlator(&s, &far)).abs();
            assert!(dc <= td_correlator_tail_bound(n2, &w) + 1e-12);
            let dg = (td_greens(&s, &w) - td_greens(&s, &far)).norm();
            assert!(dg <= td_greens_tail_bound(n2, &w) + 1e-12);
        }
    }
}

#[test]
fn td_greens_converges_at_peak() {
    let s = SpectralScene::random(32, 7).unwrap();
    let (peak, _) = s.transitions().fold((0.0, 0.0), |acc, t| if t.1 > acc.1 { t } else { acc });
    let gamma = 0.05;
    let hnorm = s.energies().iter().fold(0.0f64, |m, e| m.max((e - s.ground_energy()).abs()));
    let tau = 0.1 / hnorm;
    let j_max = ((1e6f64).ln() / (gamma * tau)).ceil() as u64;
    let w = fourier_weights(peak, gamma, tau, j_max).unwrap();
    let exact = exact_greens(&s, peak, gamma).unwrap();
    assert!((td_greens(&s, &w) - exact).norm() <= 1e-3 * exact.norm());
}

#[test]
fn two_level_peak_location() {
    let (gap, gamma) = (0.6, 0.02);
    let s = SpectralScene::two_level(gap, 0.5).unwrap();
    let tau = 0.2;
    let j_max = ((1e8f64).ln() / (gamma * tau)).ceil() as u64;
    let mut best = (0.0, f64::MIN);
    for k in 0..=400 {
        let omega = gap - 0.1 + 0.2 * k as f64 / 400.0;
        let w = fourier_weights(omega, gamma, tau, j_max).unwrap();
        let c = td_correlator(&s, &w);
        if c > best.1 {
            best = (omega, c);
        }
    }
    assert!((best.0 - gap).abs() <= gamma / 10.0);
}

#[test]
fn scene_validation() {
    let mut h = CMatrix::zeros(2, 2);
    h[(0, 1)] = Complex64::from(1.0);
    assert!(matches!(SpectralScene::new(h, CMatrix::zeros(2, 2)), Err(Error::NotHermitian { .. })));
    let s = SpectralScene::random(4, 0).unwrap();
    let bad = s.ground_state() * Complex64::from(2.0);
    assert!(SpectralScene::with_ground_state(s.hamiltonian().clone(), s.dipole().clone(), bad).is_err());
    // a normalized non-eigenvector
    let mut v = s.ground_state().clone();
    v[0] += Complex64::from(0.3);
    let v = v.normalize();
    assert!(SpectralScene::with_ground_state(s.hamiltonian().clone(), s.dipole().clone(), v).is_err());
    assert!(SpectralScene::new(CMatrix::zeros(2, 2), CMatrix::zeros(3, 3)).is_err());
}

#[test]
fn scene_json_round_trip() {
    let s = SpectralScene::random(6, 9).unwrap();
    let file = SceneFile {
        dim: 6,
        hamiltonian: ComplexArray::from_matrix(s.hamiltonian()),
        dipole: ComplexArray::from_matrix(s.dipole()),
        psi0: None,
    };
    let text = serde_json::to_string(&file).unwrap();
    let t = SpectralScene::from_json(&text).unwrap();
    assert!((t.ground_energy() - s.ground_energy()).abs() < 1e-12);
    assert!(SpectralScene::from_json("{\"dim\": 2}").is_err());
}

#[test]
fn lattice_scene_is_valid() {
    let s = SpectralScene::lattice_1d(12, 1.0).unwrap();
    let e0 = -2.0 * (PI / 13.0).cos();
    assert!((s.ground_energy() - e0).abs() < 1e-12);
    let g = exact_greens(&s, 0.5, 0.05).unwrap();
    assert!(g.im < 0.0);
}

#[test]
fn commuting_fragments_are_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let a = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(8, |_, _| rng.gen_range(-1.0..1.0)));
    let b = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(8, |_, _| rng.gen_range(-1.0..1.0)));
    let r = trotter_effective_spectrum(&[complexify(&a), complexify(&b)], 0.05).unwrap();
    for l in 0..8 {
        assert!((r.effective[l] - r.exact[l]).abs() < 1e-12);
        assert!(r.y3_expectation[l].abs() < 1e-12);
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

#[test]
fn corrected_residual_scales_as_delta_to_the_fourth() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..5 {
        let frags = [random_fragment(8, &mut rng), random_fragment(8, &mut rng)];
        let deltas = [0.02, 0.01, 0.005];
        let mut res = Vec::new();
        for &d in &deltas {
            let r = trotter_effective_spectrum(&frags, d).unwrap();
            let worst = (0..8)
                .map(|l| (r.effective[l] - r.exact[l] - r.predicted_shift[l]).abs())
                .fold(0.0, f64::max);
            res.push(worst.ln());
        }
        let xs: Vec<f64> = deltas.iter().map(|d: &f64| d.ln()).collect();
        let s = slope(&xs, &res);
        assert!((s - 4.0).abs() <= 0.3, "slope {s}");
    }
}

#[test]
fn step_size_rule_bounds_shift() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let frags = [random_fragment(8, &mut rng), random_fragment(8, &mut rng), random_fragment(8, &mut rng)];
    let probe = trotter_effective_spectrum(&frags, 0.01).unwrap();
    let ymax = probe.y3_expectation.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let gamma = 1e-3;
    let d = (gamma / ymax).sqrt();
    let r = trotter_effective_spectrum(&frags, d).unwrap();
    for l in 0..8 {
        assert!((r.effective[l] - r.exact[l]).abs() <= 2.0 * gamma);
    }
}

#[test]
fn phase_wrap_is_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let f = random_fragment(4, &mut rng) * Complex64::from(10.0);
    match trotter_effective_spectrum(&[f.clone()], 10.0) {
        Err(Error::PhaseWrap { suggested_delta, .. }) => {
            assert!(trotter_effective_spectrum(&[f], suggested_delta).is_ok())
        }
        other => panic!("expected phase wrap, got {other:?}"),
    }
}

#[test]
fn shot_outcomes() {
    let s = SpectralScene::two_level(0.5, 0.3).unwrap();
    let w = fourier_weights(0.55, 0.05, 0.2, 1000).unwrap();
    let one = hadamard_shot_simulator(&s, &w, 1, 3).unwrap();
    assert!((one.estimate.abs() - one.scale).abs() < 1e-12 * one.scale);
    let a = hadamard_shot_simulator(&s, &w, 5000, 42).unwrap();
    let b = hadamard_shot_simulator(&s, &w, 5000, 42).unwrap();
    assert_eq!(a, b);
    assert!(hadamard_shot_simulator(&s, &w, 0, 0).is_err());
}

#[test]
fn symmetric_coin_scene() {
    // a short window makes the correlator oscillate in ω; bisect for a zero
    let s = SpectralScene::two_level(0.5, 0.3).unwrap();
    let tau = 0.4;
    let mut lo = 0.5;
    let mut hi = 0.5 + PI / tau;
    let f = |o: f64| td_correlator(&s, &fourier_weights(o, 0.05, tau, 3).unwrap());
    assert!(f(lo) > 0.0 && f(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid
        } else {
            hi = mid
        }
    }
    let w = fourier_weights(lo, 0.05, tau, 3).unwrap();
    let shots = 10_000;
    let mut ok = 0;
    for seed in 0..200 {
        let e = hadamard_shot_simulator(&s, &w, shots, seed).unwrap();
        assert!(e.expectation.abs() < 1e-9);
        if e.estimate.abs() <= 3.0 * e.scale / (shots as f64).sqrt() {
            ok += 1;
        }
    }
    assert!(ok >= 198);
}

#[test]
fn shot_estimator_is_unbiased() {
    let s = SpectralScene::random(6, 15).unwrap();
    let (peak, _) = s.transitions().fold((0.0, 0.0), |acc, t| if t.1 > acc.1 { t } else { acc });
    let w = fourier_weights(peak + 0.05, 0.05, 0.2, 2000).unwrap();
    let exact = cross_section_prefactor(w.omega) * PI * td_correlator(&s, &w);
    let runs = 10_000;
    let ests: Vec<f64> = (0..runs).map(|seed| hadamard_shot_simulator(&s, &w, 50, seed).unwrap().estimate).collect();
    let mean = ests.iter().sum::<f64>() / runs as f64;
    let var = ests.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (runs as f64 - 1.0);
    assert!((mean - exact).abs() <= 3.0 * (var / runs as f64).sqrt());
}

#[test]
fn spectrum_rows() {
    let s = SpectralScene::two_level(0.5, 0.3).unwrap();
    let rows = absorption_spectrum(&s, &[0.4, 0.5, 0.6], 0.05, 0.2, 2000, 1000, 1).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].sigma_exact > rows[0].sigma_exact);
    for r in &rows {
        assert!((r.sigma_td - r.sigma_exact).abs() < 1e-2 * rows[1].sigma_exact);
    }
}
