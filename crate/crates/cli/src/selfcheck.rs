//! Fast internal consistency checks: zero-variance identities, the path
//! covariance oracle, closed-form spectra and worker-count determinism.

use wmc::analysis::{covariance_oracle, sample_moments};
use wmc::kernels::{absolute_value_levels, kernel_free, kernel_harmonic, kernel_linear, poschl_teller_ground_energy};
use wmc::pap::{PapDensity, PapFamily, PapParams};
use wmc::pathgen::PathGenerator;
use wmc::randomness::StreamKey;
use wmc::{estimate, validate, BackgroundSpec, EstimatorOptions, MethodSpec, PotentialSpec, SimConfig, WilsonKind};

pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn zero_variance(opts: &EstimatorOptions) -> Check {
    let config = SimConfig::origin_1d(10.0, 200, 500, 1);
    let harmonic = PotentialSpec::Harmonic { omega: 1.0 };
    let linear = PotentialSpec::Linear { slope: 0.5 };
    let mut worst: f64 = 0.0;
    for (potential, background, method, exact) in [
        (harmonic, BackgroundSpec::harmonic_1d(1.0), MethodSpec::Subtracted, kernel_harmonic(&config, 1.0)),
        (harmonic, BackgroundSpec::harmonic_1d(1.0), MethodSpec::Compensated, kernel_harmonic(&config, 1.0)),
        (linear, BackgroundSpec::linear_1d(0.5), MethodSpec::Compensated, kernel_linear(&config, 0.5)),
        (PotentialSpec::Free, BackgroundSpec::None, MethodSpec::Plain, kernel_free(&config)),
    ] {
        let run = validate(config.clone(), potential, background, method).expect("valid bundle");
        match estimate(&run, opts) {
            Ok(e) => worst = worst.max(rel(e.value, exact)).max(e.std_error / e.value),
            Err(_) => worst = f64::INFINITY,
        }
    }
    Check {
        name: "zero-variance identities",
        pass: worst < 1e-12,
        detail: format!("max relative deviation {worst:.1e}"),
    }
}

fn covariance() -> Check {
    const N: usize = 20_000;
    const NP: usize = 16;
    let mut worst: f64 = 0.0;
    for (alpha, beta) in [(0.0, 0.0), (0.04, 0.02)] {
        let generator = PathGenerator::from_coefficients(1, NP, alpha, beta);
        let rows: Vec<Vec<f64>> = (0..N)
            .map(|i| generator.generate(StreamKey::new(7, i as u64, 0)).points()[1..NP].to_vec())
            .collect();
        let (Ok(sample), Ok(exact)) = (sample_moments(&rows), covariance_oracle(alpha, beta, NP)) else {
            worst = f64::INFINITY;
            continue;
        };
        let c = &exact.covariance;
        for i in 0..NP - 1 {
            worst = worst.max((sample.mean[i] - exact.mean[i]).abs() / (c[(i, i)] / N as f64).sqrt());
            for j in 0..NP - 1 {
                let se = ((c[(i, i)] * c[(j, j)] + c[(i, j)].powi(2)) / N as f64).sqrt();
                worst = worst.max((sample.covariance[(i, j)] - c[(i, j)]).abs() / se);
            }
        }
    }
    Check {
        name: "path covariance oracle",
        pass: worst < 5.0,
        detail: format!("largest deviation {worst:.2} standard errors"),
    }
}

fn transform_identity() -> Check {
    let config = SimConfig::origin_1d(2.0, 1, 2, 0);
    let ho = PapDensity::new(PapFamily::Base, PapParams::harmonic(1.0, 0.0, 2.0))
        .map(|d| rel(d.laplace_transform_at_one(), kernel_harmonic(&config, 1.0) / kernel_free(&config)));
    let lin = PapDensity::new(PapFamily::Base, PapParams::linear(0.5, 0.0, 2.0))
        .map(|d| rel(d.laplace_transform_at_one(), kernel_linear(&config, 0.5) / kernel_free(&config)));
    let worst = ho.unwrap_or(f64::INFINITY).max(lin.unwrap_or(f64::INFINITY));
    Check {
        name: "density transform identity",
        pass: worst < 1e-3,
        detail: format!("max relative error {worst:.1e}"),
    }
}

fn spectra() -> Check {
    let abs = absolute_value_levels(0.5, 1.0, 0).map(|l| l.values[0]).unwrap_or(f64::NAN);
    let pt = poschl_teller_ground_energy(1.0, 1, 1.0).unwrap_or(f64::NAN);
    Check {
        name: "closed-form ground states",
        pass: (abs - 0.509_397).abs() < 1e-6 && pt == -0.5,
        detail: format!("absolute value {abs:.6}, Poschl-Teller {pt}"),
    }
}

fn determinism() -> Check {
    let run = validate(
        SimConfig::origin_1d(5.0, 2_000, 200, 3),
        PotentialSpec::PoschlTeller { alpha: 1.0, lambda: 1 },
        BackgroundSpec::harmonic_1d(0.75),
        MethodSpec::Subtracted,
    )
    .expect("valid bundle");
    let values = |w| wmc::wilson::sample_wilson_lines(&run, WilsonKind::Subtracted, w).map(|s| s.values);
    let (a, b) = (values(1), values(4));
    let pass = matches!((&a, &b), (Ok(a), Ok(b)) if a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
    Check {
        name: "worker-count determinism",
        pass,
        detail: "1 vs 4 workers".into(),
    }
}

pub fn run_all(workers: usize) -> Vec<Check> {
    let opts = EstimatorOptions { workers };
    vec![zero_variance(&opts), covariance(), transform_identity(), spectra(), determinism()]
}
