//! Closed-form reference kernels and analytic energy levels.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BackgroundSpec, PotentialSpec, SimConfig};
use crate::special::{airy_ai_zeros, airy_aip_zeros};

/// `ln sinh(z)` for `z > 0`, stable for large `z`.
pub fn ln_sinh(z: f64) -> f64 {
    if z > 20.0 {
        z - std::f64::consts::LN_2 + (-(-2.0 * z).exp()).ln_1p()
    } else {
        z.sinh().ln()
    }
}

fn ln_free_axis(mass: f64, time: f64, x: f64, y: f64) -> f64 {
    0.5 * (mass / (2.0 * PI * time)).ln() - mass * (y - x) * (y - x) / (2.0 * time)
}

/// Mehler kernel for one axis in log form.
fn ln_harmonic_axis(mass: f64, omega: f64, time: f64, x: f64, y: f64) -> f64 {
    let z = omega * time;
    if z == 0.0 {
        return ln_free_axis(mass, time, x, y);
    }
    let coth = 1.0 / z.tanh();
    let csch = (-ln_sinh(z)).exp();
    0.5 * ((mass * omega / (2.0 * PI)).ln() - ln_sinh(z))
        - 0.5 * mass * omega * ((x * x + y * y) * coth - 2.0 * x * y * csch)
}

fn ln_linear_correction(mass: f64, slope: f64, time: f64, x: f64, y: f64) -> f64 {
    -slope * time * (x + y) / 2.0 + slope * slope * time.powi(3) / (24.0 * mass)
}

/// `ln K_0 = (D/2) ln(m / 2 pi T) - m |y - x|^2 / 2T`.
pub fn ln_kernel_free(config: &SimConfig) -> f64 {
    config
        .x_start
        .iter()
        .zip(&config.x_end)
        .map(|(x, y)| ln_free_axis(config.mass, config.time, *x, *y))
        .sum()
}

pub fn kernel_free(config: &SimConfig) -> f64 {
    ln_kernel_free(config).exp()
}

/// Harmonic oscillator kernel with the same frequency on every axis.
pub fn ln_kernel_harmonic(config: &SimConfig, omega: f64) -> f64 {
    config
        .x_start
        .iter()
        .zip(&config.x_end)
        .map(|(x, y)| ln_harmonic_axis(config.mass, omega, config.time, *x, *y))
        .sum()
}

pub fn kernel_harmonic(config: &SimConfig, omega: f64) -> f64 {
    ln_kernel_harmonic(config, omega).exp()
}

/// Kernel of `V = k x_1`: `K_0 exp(-kT(x+y)/2 + k^2 T^3 / 24m)`.
pub fn ln_kernel_linear(config: &SimConfig, slope: f64) -> f64 {
    ln_kernel_free(config)
        + ln_linear_correction(config.mass, slope, config.time, config.x_start[0], config.x_end[0])
}

pub fn kernel_linear(config: &SimConfig, slope: f64) -> f64 {
    ln_kernel_linear(config, slope).exp()
}

/// `ln K_U` of a background, with per-axis frequencies, centres and slopes.
pub fn ln_kernel_background(config: &SimConfig, background: &BackgroundSpec) -> f64 {
    let m = config.mass;
    let t = config.time;
    let axes = config.x_start.iter().zip(&config.x_end).enumerate();
    match background {
        BackgroundSpec::None => ln_kernel_free(config),
        BackgroundSpec::Harmonic { frequency, center } => axes
            .map(|(j, (x, y))| ln_harmonic_axis(m, frequency[j], t, x - center[j], y - center[j]))
            .sum(),
        BackgroundSpec::Linear { slope } => axes
            .map(|(j, (x, y))| ln_free_axis(m, t, *x, *y) + ln_linear_correction(m, slope[j], t, *x, *y))
            .sum(),
    }
}

pub fn kernel_background(config: &SimConfig, background: &BackgroundSpec) -> f64 {
    ln_kernel_background(config, background).exp()
}

/// Closed-form `ln K_V` where one exists (free, harmonic, linear).
pub fn ln_kernel_exact(config: &SimConfig, potential: &PotentialSpec) -> Option<f64> {
    match *potential {
        PotentialSpec::Free => Some(ln_kernel_free(config)),
        PotentialSpec::Harmonic { omega } => Some(ln_kernel_harmonic(config, omega)),
        PotentialSpec::Linear { slope } => Some(ln_kernel_linear(config, slope)),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLevels {
    /// Ascending energies `E_0, E_1, ...`.
    pub values: Vec<f64>,
    pub potential: PotentialSpec,
}

/// Levels of `V = g|x|`: `E_n = -(g^2/2m)^{1/3} a`, where `a` runs over the
/// zeros of `Ai'` for even `n` and of `Ai` for odd `n`.
pub fn absolute_value_levels(g: f64, mass: f64, n_max: usize) -> Result<EnergyLevels> {
    if !(g > 0.0 && mass > 0.0) {
        return Err(Error::InvalidArgument("strength and mass must be positive".into()));
    }
    let scale = (g * g / (2.0 * mass)).cbrt();
    let even = airy_aip_zeros(n_max / 2 + 1)?;
    let odd = airy_ai_zeros(n_max.div_ceil(2))?;
    let values = (0..=n_max)
        .map(|n| {
            let zero = if n % 2 == 0 { even[n / 2] } else { odd[(n - 1) / 2] };
            -scale * zero
        })
        .collect();
    Ok(EnergyLevels {
        values,
        potential: PotentialSpec::AbsoluteValue { strength: g },
    })
}

/// Bound state of the `lambda = 1` Poschl-Teller well, `-alpha^2 / 2m`.
pub fn poschl_teller_ground_energy(alpha: f64, lambda: u32, mass: f64) -> Result<f64> {
    if lambda != 1 {
        return Err(Error::UnsupportedLambda { lambda });
    }
    Ok(-alpha * alpha / (2.0 * mass))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(time: f64, x: f64, y: f64) -> SimConfig {
        SimConfig::origin_1d(time, 1, 2, 0).with_endpoints(vec![x], vec![y])
    }

    #[test]
    fn free_kernel_examples() {
        let k = kernel_free(&cfg(2.0 * PI, 0.3, 0.3));
        assert!((k - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!(kernel_free(&cfg(1.0, 0.0, 60.0)) < 1e-300);
        let two = SimConfig::origin_1d(1.7, 1, 2, 0).with_endpoints(vec![0.2, 0.2], vec![0.2, 0.2]);
        let one = kernel_free(&cfg(1.7, 0.2, 0.2));
        assert!((kernel_free(&two) - one * one).abs() < 1e-15);
    }

    #[test]
    fn harmonic_kernel_examples() {
        let k = kernel_harmonic(&cfg(1.0, 0.0, 0.0), 1.0);
        assert!((k - (1.0 / (2.0 * PI * 1.0f64.sinh())).sqrt()).abs() < 1e-15);
        assert!((k - 0.368_005_198_707_560_8).abs() < 1e-15);
        // small frequency approaches the free kernel
        let c = cfg(2.0, 0.4, -0.3);
        let rel = kernel_harmonic(&c, 1e-4) / kernel_free(&c) - 1.0;
        assert!(rel.abs() < 1e-7);
        assert_eq!(ln_kernel_harmonic(&c, 0.0), ln_kernel_free(&c));
        // symmetric in x <-> y
        let swapped = cfg(2.0, -0.3, 0.4);
        assert!((kernel_harmonic(&c, 1.3) - kernel_harmonic(&swapped, 1.3)).abs() < 1e-16);
        // late-time slope -omega/2
        let slope = ln_kernel_harmonic(&cfg(61.0, 0.0, 0.0), 1.0) - ln_kernel_harmonic(&cfg(60.0, 0.0, 0.0), 1.0);
        assert!((slope + 0.5).abs() < 1e-12);
        // no overflow at very late times
        assert!(ln_kernel_harmonic(&cfg(5000.0, 1.0, 2.0), 1.0).is_finite());
    }

    #[test]
    fn linear_kernel_examples() {
        let c = cfg(2.0, 0.0, 0.0);
        assert_eq!(kernel_linear(&c, 0.0), kernel_free(&c));
        let ratio = kernel_linear(&c, 0.5) / kernel_free(&c);
        assert!((ratio - (1.0f64 / 12.0).exp()).abs() < 1e-15);
        let heavy = c.with_mass(2.0);
        let r2 = kernel_linear(&heavy, 0.5) / kernel_free(&heavy);
        assert!((r2 - (1.0f64 / 24.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn background_kernel_matches_potential_kernels() {
        let c = cfg(3.0, 0.2, -0.7);
        assert_eq!(
            ln_kernel_background(&c, &BackgroundSpec::harmonic_1d(0.75)),
            ln_kernel_harmonic(&c, 0.75)
        );
        assert!((ln_kernel_background(&c, &BackgroundSpec::linear_1d(0.45)) - ln_kernel_linear(&c, 0.45)).abs() < 1e-15);
        let shifted = BackgroundSpec::Harmonic {
            frequency: vec![1.0],
            center: vec![1.0],
        };
        let moved = cfg(3.0, -0.8, -1.7);
        assert!((ln_kernel_background(&c, &shifted) - ln_kernel_harmonic(&moved, 1.0)).abs() < 1e-15);
    }

    fn chapman_kolmogorov(kernel: impl Fn(f64, f64, f64) -> f64) {
        let (x, y, t1, t2) = (0.3, -0.5, 0.7, 1.1);
        let lhs = crate::numerics::integrate(|z| kernel(y, z, t1) * kernel(z, x, t2), -15.0, 15.0, 60, 1e-14);
        let rhs = kernel(y, x, t1 + t2);
        assert!((lhs / rhs - 1.0).abs() < 1e-6);
    }

    #[test]
    fn chapman_kolmogorov_holds() {
        chapman_kolmogorov(|y, x, t| kernel_free(&cfg(t, x, y)));
        chapman_kolmogorov(|y, x, t| kernel_harmonic(&cfg(t, x, y), 1.3));
    }

    #[test]
    fn absolute_value_spectrum() {
        let levels = absolute_value_levels(0.5, 1.0, 10).unwrap();
        assert!((levels.values[0] - 0.509_397).abs() < 1e-6);
        assert!(levels.values.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(levels.values.len(), 11);
        let g: f64 = 1.7;
        let unit = absolute_value_levels(g, 1.0, 0).unwrap().values[0];
        assert!((unit / (g * g / 2.0).cbrt() - 1.018_79).abs() < 1e-5);
    }

    #[test]
    fn poschl_teller_bound_state() {
        assert_eq!(poschl_teller_ground_energy(1.0, 1, 1.0).unwrap(), -0.5);
        assert_eq!(poschl_teller_ground_energy(2.0, 1, 1.0).unwrap(), -2.0);
        assert!(matches!(
            poschl_teller_ground_energy(1.0, 2, 1.0),
            Err(Error::UnsupportedLambda { lambda: 2 })
        ));
    }
}
