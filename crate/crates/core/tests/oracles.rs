//! Independent oracles for the closed forms the estimators are checked against.

use nalgebra::{DMatrix, SymmetricEigen};

use wmc::analysis::ks_test;
use wmc::kernels::{absolute_value_levels, ln_kernel_free, ln_kernel_harmonic, poschl_teller_ground_energy};
use wmc::model::{validate, BackgroundSpec, MethodSpec, PotentialSpec, SimConfig};
use wmc::numerics::integrate;
use wmc::pap::{harmonic_support_limit, PapDensity, PapFamily, PapParams};
use wmc::pathgen::{Embedding, PathGenerator, PhysicalPath};
use wmc::potentials::evaluate;
use wmc::wilson::{sample_wilson_lines, wilson_line, WilsonKind};

/// Time-sliced harmonic kernel at `x = y = 0` from the determinant of the
/// discrete action over `slices - 1` interior points.
fn sliced_ln_kernel(omega: f64, time: f64, slices: usize) -> f64 {
    let eps = time / slices as f64;
    let n = slices - 1;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = 2.0 / eps + eps * omega * omega;
        if i + 1 < n {
            a[(i, i + 1)] = -1.0 / eps;
            a[(i + 1, i)] = -1.0 / eps;
        }
    }
    let ln_det: f64 = a.cholesky().expect("positive definite").l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    // product of slices short-time prefactors times the Gaussian integral
    let n_f = n as f64;
    slices as f64 * 0.5 * (1.0 / (2.0 * std::f64::consts::PI * eps)).ln() + 0.5 * n_f * (2.0 * std::f64::consts::PI).ln() - 0.5 * ln_det
}

#[test]
fn time_slicing_reproduces_free_kernel_exactly() {
    for slices in [2, 17, 400] {
        let ln = sliced_ln_kernel(0.0, 3.0, slices);
        let exact = ln_kernel_free(&SimConfig::origin_1d(3.0, 1, 2, 0));
        assert!((ln - exact).abs() < 1e-10, "slices {slices}: {ln} vs {exact}");
    }
}

#[test]
fn time_slicing_converges_to_mehler_kernel() {
    for t in [1.0, 4.0, 10.0] {
        let exact = ln_kernel_harmonic(&SimConfig::origin_1d(t, 1, 2, 0), 1.0);
        let coarse = sliced_ln_kernel(1.0, t, 500) - exact;
        let fine = sliced_ln_kernel(1.0, t, 1000) - exact;
        assert!(fine.abs() < 1e-4, "T={t}: error {fine}");
        // second-order convergence of the midpoint-free slicing
        assert!((coarse / fine - 4.0).abs() < 0.1, "T={t}: ratio {}", coarse / fine);
    }
}

/// Lowest eigenvalue of `-1/2 d^2/dx^2 + V` on a uniform Dirichlet grid.
fn finite_difference_ground_state(potential: PotentialSpec, half_width: f64, n: usize) -> f64 {
    let h = 2.0 * half_width / (n + 1) as f64;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let x = -half_width + (i + 1) as f64 * h;
        a[(i, i)] = 1.0 / (h * h) + evaluate(&potential, &[x], 1.0);
        if i + 1 < n {
            a[(i, i + 1)] = -0.5 / (h * h);
            a[(i + 1, i)] = -0.5 / (h * h);
        }
    }
    SymmetricEigen::new(a).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

#[test]
fn poschl_teller_bound_state_matches_diagonalisation() {
    for alpha in [1.0, 2.0] {
        let numeric = finite_difference_ground_state(PotentialSpec::PoschlTeller { alpha, lambda: 1 }, 12.0, 1200);
        let exact = poschl_teller_ground_energy(alpha, 1, 1.0).unwrap();
        assert!((numeric / exact - 1.0).abs() < 1e-3, "alpha {alpha}: {numeric} vs {exact}");
    }
}

#[test]
fn absolute_value_levels_match_diagonalisation() {
    let numeric = finite_difference_ground_state(PotentialSpec::AbsoluteValue { strength: 0.5 }, 15.0, 1500);
    let exact = absolute_value_levels(0.5, 1.0, 0).unwrap().values[0];
    assert!((numeric / exact - 1.0).abs() < 1e-3, "{numeric} vs {exact}");
}

#[test]
fn harmonic_wilson_line_mean_matches_spectral_density() {
    let t = 6.0;
    let config = SimConfig::origin_1d(t, 20_000, 400, 11);
    let potential = PotentialSpec::Harmonic { omega: 1.0 };
    let run = validate(config, potential, BackgroundSpec::None, MethodSpec::Plain).unwrap();
    let samples = sample_wilson_lines(&run, WilsonKind::Raw, 0).unwrap().values;
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);

    let density = PapDensity::new(PapFamily::Base, PapParams::harmonic(1.0, 0.0, t)).unwrap();
    let first = integrate(|v| v * density.density(v), 0.0, harmonic_support_limit(1.0, t), 200, 1e-12);
    assert!((first - t * t / 12.0).abs() < 1e-6, "density moment {first}");
    let continuum = t * t / 12.0;
    // the node sum is biased low by O(1/N_P)
    assert!((mean - continuum).abs() < 4.0 * (var / n).sqrt() + continuum / 400.0, "{mean} vs {continuum}");
}

fn straight_line_wilson(n_points: usize) -> f64 {
    let config = SimConfig::origin_1d(2.0, 1, n_points, 0).with_endpoints(vec![0.0], vec![1.0]);
    let q = PathGenerator::new(&config, &BackgroundSpec::None).blank();
    let path: PhysicalPath = Embedding::straight_line(&config).embed(&q);
    wilson_line(&path, &PotentialSpec::Harmonic { omega: 1.0 }, &config)
}

#[test]
fn node_convention_is_first_order() {
    let (a, b, c) = (straight_line_wilson(100), straight_line_wilson(200), straight_line_wilson(400));
    let ratio = (a - b) / (b - c);
    assert!((ratio - 2.0).abs() < 0.02, "Richardson ratio {ratio}");
    assert!((c - 2.0 / 6.0).abs() < 2e-3);
}

#[test]
fn prime_family_at_late_time() {
    let t = 80.0;
    let config = SimConfig::origin_1d(t, 20_000, 1000, 5);
    let potential = PotentialSpec::Harmonic { omega: 1.0 };
    let run = validate(config.clone(), potential, BackgroundSpec::harmonic_1d(0.75), MethodSpec::Compensated).unwrap();
    let v = sample_wilson_lines(&run, WilsonKind::Raw, 0).unwrap().values;
    let params = PapParams::harmonic(1.0, 0.75, t);
    let mu: f64 = 0.75 * 0.75;
    let ln_ratio = ln_kernel_free(&config) - ln_kernel_harmonic(&config, 0.75);
    let mapped: Vec<f64> = v.iter().map(|v| ln_ratio + (1.0 - mu) * v).collect();
    let cdf = PapDensity::new(PapFamily::Prime, params).unwrap().cdf_table(20_001);
    let report = ks_test(&mapped, |x| cdf.eval(x), 0.01).unwrap();
    assert!(report.pass, "D = {} vs {}", report.value, report.threshold);
}

#[test]
fn double_prime_family_on_linear_background() {
    let t = 20.0;
    let (k, kappa) = (0.5, 0.45);
    let config = SimConfig::origin_1d(t, 20_000, 1000, 6);
    let run = validate(
        config,
        PotentialSpec::Linear { slope: k },
        BackgroundSpec::linear_1d(kappa),
        MethodSpec::Compensated,
    )
    .unwrap();
    let v = sample_wilson_lines(&run, WilsonKind::Raw, 0).unwrap().values;
    let shift = -kappa * kappa * t.powi(3) / 24.0;
    let mapped: Vec<f64> = v.iter().map(|v| shift + (1.0 - kappa / k) * v).collect();
    let cdf = PapDensity::new(PapFamily::DoublePrime, PapParams::linear(k, kappa, t)).unwrap().cdf_table(20_001);
    let report = ks_test(&mapped, |x| cdf.eval(x), 0.01).unwrap();
    assert!(report.pass, "D = {} vs {}", report.value, report.threshold);
}
