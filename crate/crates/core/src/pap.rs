//! Path-averaged-potential (PAP) distributions: the law of the Wilson-line
//! variable over an ensemble of trajectories, and the compensation factors
//! that reweight background ensembles back to the free one.
//!
//! All families are affine images of one of two inner densities: the HO
//! spectral series (optionally multiplied by `exp(a - mu v)`) or a Gaussian.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{ln_kernel_background, ln_kernel_free, ln_sinh};
use crate::model::{BackgroundSpec, PotentialSpec, SimConfig};
use crate::numerics::{compensated_sum, cumulative_trapezoid, integrate, linspace, trapezoid};
use crate::special::{bessel_k_scaled, ln_factorial};

/// Truncation order that already matches the converged series to 1e-6.
pub const DEFAULT_TRUNCATION: usize = 10;

/// Gaussian density, `k != 0`: mean `kT(x+y)/2`, variance `k^2 T^3 / 12m`.
pub fn pap_linear(v: f64, slope: f64, time: f64, x: f64, y: f64, mass: f64) -> Result<f64> {
    let (mean, sd) = linear_moments(slope, time, x, y, mass)?;
    Ok(gaussian_ln_density(v, mean, sd).exp())
}

fn linear_moments(slope: f64, time: f64, x: f64, y: f64, mass: f64) -> Result<(f64, f64)> {
    if slope == 0.0 {
        return Err(Error::DegenerateDistribution(
            "zero slope: v is identically zero".into(),
        ));
    }
    if !(time > 0.0) {
        return Err(Error::DegenerateDistribution("non-positive time".into()));
    }
    let mean = slope * time * (x + y) / 2.0;
    let var = slope * slope * time.powi(3) / (12.0 * mass);
    Ok((mean, var.sqrt()))
}

fn gaussian_ln_density(v: f64, mean: f64, sd: f64) -> f64 {
    let z = (v - mean) / sd;
    -0.5 * z * z - (sd * (2.0 * PI).sqrt()).ln()
}

/// Upper end of the tabulated HO support: mean plus 30 standard deviations of
/// the free-path law, `(omega T)^2 (1/12 + 15/sqrt(90))`. Beyond this the
/// truncated series loses its sign and the true density is below 1e-30.
pub fn harmonic_support_limit(omega: f64, time: f64) -> f64 {
    let wt = omega * time;
    wt * wt * (1.0 / 12.0 + 15.0 / 90f64.sqrt())
}

/// `ln` of the HO spectral PAP at `x = y = 0` over free trajectories.
///
/// Each term carries `exp(-v_n) K(v_n)`, which is evaluated as
/// `exp(-2 v_n) * [exp(v_n) K(v_n)]` with `exp(-2 v_0)` factored out, so very
/// small `v` gives a finite logarithm rather than `0 * inf`. Negative
/// truncated sums are reported as zero density.
pub fn ln_pap_harmonic_spectral(v: f64, omega: f64, time: f64, n_truncation: usize) -> f64 {
    if !(v > 0.0) || v >= harmonic_support_limit(omega, time) {
        return f64::NEG_INFINITY;
    }
    let wt = omega * time;
    let v_n = |n: usize| {
        let a = (n as f64 + 0.5) * wt;
        a * a / (8.0 * v)
    };
    let v0 = v_n(0);
    let terms = (0..=n_truncation).step_by(2).map(|n| {
        let z = v_n(n);
        let ln_c = ln_factorial(n as u32)
            - (n as f64 + 0.5) * std::f64::consts::LN_2
            - 2.0 * ln_factorial((n / 2) as u32)
            - 2.5 * ((n as f64 + 0.5) * wt).ln();
        let damping = ln_c + 1.5 * z.ln() - 2.0 * (z - v0);
        if damping < -745.0 {
            return 0.0;
        }
        let bracket = (z - 0.75) * bessel_k_scaled(0.25, z) + z * bessel_k_scaled(1.25, z);
        damping.exp() * bracket
    });
    let sum = compensated_sum(terms);
    if !(sum > 0.0) {
        return f64::NEG_INFINITY;
    }
    32f64.ln() + 0.5 * wt.ln() - PI.ln() - 2.0 * v0 + sum.ln()
}

pub fn pap_harmonic_spectral(v: f64, omega: f64, time: f64, n_truncation: usize) -> f64 {
    ln_pap_harmonic_spectral(v, omega, time, n_truncation).exp()
}

/// `(K_0 / K_U) exp(-mu v)`, stored in log form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompensationFactor {
    pub ln_prefactor: f64,
    pub mu: f64,
}

impl CompensationFactor {
    pub fn ln_value(&self, v: f64) -> f64 {
        self.ln_prefactor - self.mu * v
    }

    pub fn value(&self, v: f64) -> f64 {
        self.ln_value(v).exp()
    }
}

fn unsupported_pair(potential: &PotentialSpec, background: &BackgroundSpec) -> Error {
    Error::UnsupportedPair {
        potential: potential.to_string(),
        background: background.to_string(),
    }
}

/// Closed-form compensation factor for a background proportional to the
/// potential, `U = mu V`: harmonic on a harmonic background centred at the
/// origin, or linear on linear, both in one dimension.
pub fn compensation_factor(
    potential: &PotentialSpec,
    background: &BackgroundSpec,
    config: &SimConfig,
) -> Result<CompensationFactor> {
    if config.dimension != 1 {
        return Err(unsupported_pair(potential, background));
    }
    let mu = match (potential, background) {
        (PotentialSpec::Harmonic { omega }, BackgroundSpec::Harmonic { frequency, center })
            if center[0] == 0.0 =>
        {
            let w = frequency[0] / omega;
            w * w
        }
        (PotentialSpec::Linear { slope }, BackgroundSpec::Linear { slope: bg }) if *slope != 0.0 => {
            bg[0] / slope
        }
        _ => return Err(unsupported_pair(potential, background)),
    };
    Ok(CompensationFactor {
        ln_prefactor: ln_kernel_free(config) - ln_kernel_background(config, background),
        mu,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PapFamily {
    /// Free trajectories.
    Base,
    /// `v` on harmonic-background trajectories.
    Omega,
    /// `v` on linear-background trajectories.
    Kappa,
    /// `v + ln F(v)` for harmonic-background samples.
    Prime,
    /// `v + ln G(v)` for linear-background samples.
    DoublePrime,
    /// Subtracted `nu` on harmonic-background trajectories.
    Tilde,
    /// Subtracted `nu` on linear-background trajectories.
    Hat,
}

impl PapFamily {
    pub const ALL: [PapFamily; 7] = [
        PapFamily::Base,
        PapFamily::Omega,
        PapFamily::Kappa,
        PapFamily::Prime,
        PapFamily::DoublePrime,
        PapFamily::Tilde,
        PapFamily::Hat,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PapFamily::Base => "base",
            PapFamily::Omega => "omega",
            PapFamily::Kappa => "kappa",
            PapFamily::Prime => "prime",
            PapFamily::DoublePrime => "double_prime",
            PapFamily::Tilde => "tilde",
            PapFamily::Hat => "hat",
        }
    }

    pub fn parse(name: &str) -> Option<PapFamily> {
        PapFamily::ALL.into_iter().find(|f| f.name() == name)
    }
}

impl fmt::Display for PapFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PapSystem {
    /// `V = m omega^2 x^2 / 2` with background frequency `Omega`.
    Harmonic { omega: f64, bg_omega: f64 },
    /// `V = k x` with background slope `kappa`.
    Linear { slope: f64, bg_slope: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PapParams {
    pub system: PapSystem,
    pub time: f64,
    pub x: f64,
    pub y: f64,
    pub mass: f64,
    /// Highest even order kept in the HO spectral series.
    pub n_truncation: usize,
}

impl PapParams {
    pub fn harmonic(omega: f64, bg_omega: f64, time: f64) -> Self {
        PapParams {
            system: PapSystem::Harmonic { omega, bg_omega },
            time,
            x: 0.0,
            y: 0.0,
            mass: 1.0,
            n_truncation: DEFAULT_TRUNCATION,
        }
    }

    pub fn linear(slope: f64, bg_slope: f64, time: f64) -> Self {
        PapParams {
            system: PapSystem::Linear { slope, bg_slope },
            time,
            x: 0.0,
            y: 0.0,
            mass: 1.0,
            n_truncation: DEFAULT_TRUNCATION,
        }
    }

    pub fn with_endpoints(self, x: f64, y: f64) -> Self {
        PapParams { x, y, ..self }
    }

    pub fn with_mass(self, mass: f64) -> Self {
        PapParams { mass, ..self }
    }

    pub fn with_truncation(self, n_truncation: usize) -> Self {
        PapParams { n_truncation, ..self }
    }
}

#[derive(Debug, Clone, Copy)]
enum Inner {
    /// `exp(ln_weight - mu v) * P_HO(v)`.
    Spectral {
        omega: f64,
        time: f64,
        n_truncation: usize,
        ln_weight: f64,
        mu: f64,
    },
    Gaussian {
        mean: f64,
        sd: f64,
    },
}

impl Inner {
    fn ln_density(&self, v: f64) -> f64 {
        match *self {
            Inner::Spectral {
                omega,
                time,
                n_truncation,
                ln_weight,
                mu,
            } => {
                let base = ln_pap_harmonic_spectral(v, omega, time, n_truncation);
                if base == f64::NEG_INFINITY {
                    base
                } else {
                    ln_weight - mu * v + base
                }
            }
            Inner::Gaussian { mean, sd } => gaussian_ln_density(v, mean, sd),
        }
    }

    fn support(&self) -> (f64, f64) {
        match *self {
            Inner::Spectral { omega, time, .. } => (0.0, harmonic_support_limit(omega, time)),
            Inner::Gaussian { mean, sd } => (mean - 12.0 * sd, mean + 12.0 * sd),
        }
    }
}

/// A family evaluated at fixed parameters:
/// `density(v) = inner((v - shift) / scale) / |scale|`.
#[derive(Debug, Clone, Copy)]
pub struct PapDensity {
    inner: Inner,
    shift: f64,
    scale: f64,
    pub family: PapFamily,
    pub params: PapParams,
}

fn unsupported(family: PapFamily, reason: &str) -> Error {
    Error::UnsupportedFamily {
        family: family.name().into(),
        reason: reason.into(),
    }
}

fn singular(family: PapFamily, reason: &str) -> Error {
    Error::SingularTransform {
        family: family.name().into(),
        reason: reason.into(),
    }
}

impl PapDensity {
    pub fn new(family: PapFamily, params: PapParams) -> Result<Self> {
        if !(params.time > 0.0 && params.mass > 0.0) {
            return Err(Error::InvalidArgument("time and mass must be positive".into()));
        }
        let t = params.time;
        let (inner, shift, scale) = match params.system {
            PapSystem::Harmonic { omega, bg_omega } => {
                if matches!(family, PapFamily::Kappa | PapFamily::DoublePrime | PapFamily::Hat) {
                    return Err(unsupported(family, "family belongs to the linear system"));
                }
                if params.x != 0.0 || params.y != 0.0 {
                    return Err(unsupported(
                        family,
                        "the harmonic spectral series is known only for x = y = 0",
                    ));
                }
                if !(omega > 0.0) || bg_omega < 0.0 {
                    return Err(Error::InvalidArgument("frequencies must be positive".into()));
                }
                let mu = (bg_omega / omega).powi(2);
                // ln(K_0 / K_Omega) at x = y = 0
                let z = bg_omega * t;
                let ln_ratio = if z == 0.0 { 0.0 } else { 0.5 * (ln_sinh(z) - z.ln()) };
                let spectral = |ln_weight, mu| Inner::Spectral {
                    omega,
                    time: t,
                    n_truncation: params.n_truncation,
                    ln_weight,
                    mu,
                };
                if matches!(family, PapFamily::Prime | PapFamily::Tilde) && mu == 1.0 {
                    return Err(singular(family, "omega equals the background frequency"));
                }
                match family {
                    PapFamily::Base => (spectral(0.0, 0.0), 0.0, 1.0),
                    PapFamily::Omega => (spectral(ln_ratio, mu), 0.0, 1.0),
                    PapFamily::Prime => (spectral(ln_ratio, mu), ln_ratio, 1.0 - mu),
                    PapFamily::Tilde => (spectral(ln_ratio, mu), 0.0, 1.0 - mu),
                    _ => unreachable!(),
                }
            }
            PapSystem::Linear { slope, bg_slope } => {
                if matches!(family, PapFamily::Omega | PapFamily::Prime | PapFamily::Tilde) {
                    return Err(unsupported(family, "family belongs to the harmonic system"));
                }
                let (mean, sd) = linear_moments(slope, t, params.x, params.y, params.mass)?;
                let mu = bg_slope / slope;
                if matches!(family, PapFamily::DoublePrime | PapFamily::Hat) && mu == 1.0 {
                    return Err(singular(family, "k equals the background slope"));
                }
                let shifted = Inner::Gaussian {
                    mean: mean - bg_slope * slope * t.powi(3) / (12.0 * params.mass),
                    sd,
                };
                let c = bg_slope * t * (params.x + params.y) / 2.0
                    - bg_slope * bg_slope * t.powi(3) / (24.0 * params.mass);
                match family {
                    PapFamily::Base => (Inner::Gaussian { mean, sd }, 0.0, 1.0),
                    PapFamily::Kappa => (shifted, 0.0, 1.0),
                    PapFamily::DoublePrime => (shifted, c, 1.0 - mu),
                    PapFamily::Hat => (shifted, 0.0, 1.0 - mu),
                    _ => unreachable!(),
                }
            }
        };
        Ok(PapDensity {
            inner,
            shift,
            scale,
            family,
            params,
        })
    }

    pub fn ln_density(&self, v: f64) -> f64 {
        self.inner.ln_density((v - self.shift) / self.scale) - self.scale.abs().ln()
    }

    pub fn density(&self, v: f64) -> f64 {
        self.ln_density(v).exp()
    }

    /// Maps a raw Wilson line drawn from the family's trajectory ensemble
    /// onto the variable this family describes.
    pub fn transform(&self, v: f64) -> f64 {
        self.shift + self.scale * v
    }

    /// Interval outside which the density is zero or negligible.
    pub fn support(&self) -> (f64, f64) {
        let (a, b) = self.inner.support();
        let (a, b) = (self.shift + self.scale * a, self.shift + self.scale * b);
        (a.min(b), a.max(b))
    }

    /// Support trimmed to where the density exceeds `1e-15` of its peak.
    pub fn effective_range(&self) -> (f64, f64) {
        let (a, b) = self.support();
        let grid = linspace(a, b, 4001);
        let ln: Vec<f64> = grid.iter().map(|&v| self.ln_density(v)).collect();
        let peak = ln.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let keep = |l: &f64| *l > peak - 34.5;
        let first = ln.iter().position(keep).unwrap_or(0);
        let last = ln.iter().rposition(keep).unwrap_or(grid.len() - 1);
        (grid[first.saturating_sub(1)], grid[(last + 1).min(grid.len() - 1)])
    }

    /// `int P(v) exp(-v) dv`, the ratio `K_V / K_0` for the base family.
    pub fn laplace_transform_at_one(&self) -> f64 {
        let (a, b) = self.support();
        // exp(-v) moves a Gaussian's mass down by scale * variance
        let (a, b) = match self.inner {
            Inner::Gaussian { sd, .. } => {
                let reach = self.scale.abs() * sd * sd;
                (a - reach, b + reach)
            }
            Inner::Spectral { .. } => (a, b),
        };
        let grid = linspace(a, b, 2001);
        let peak = grid
            .iter()
            .map(|&v| self.ln_density(v) - v)
            .fold(f64::NEG_INFINITY, f64::max);
        let body = integrate(|v| (self.ln_density(v) - v - peak).exp(), a, b, 256, 1e-13);
        body * peak.exp()
    }

    /// Normalised cumulative distribution on `points` nodes.
    pub fn cdf_table(&self, points: usize) -> CdfTable {
        let (a, b) = self.effective_range();
        let grid = linspace(a, b, points);
        let density: Vec<f64> = grid.iter().map(|&v| self.density(v)).collect();
        CdfTable::from_density(grid, &density)
    }
}

/// Evaluates one family at a single point.
pub fn pap_transformed(v: f64, family: PapFamily, params: &PapParams) -> Result<f64> {
    Ok(PapDensity::new(family, *params)?.density(v))
}

/// Piecewise-linear CDF built by trapezoid integration.
#[derive(Debug, Clone)]
pub struct CdfTable {
    grid: Vec<f64>,
    cdf: Vec<f64>,
}

impl CdfTable {
    pub fn from_density(grid: Vec<f64>, density: &[f64]) -> Self {
        let mut cdf = cumulative_trapezoid(&grid, density);
        let total = *cdf.last().unwrap_or(&1.0);
        if total > 0.0 {
            cdf.iter_mut().for_each(|c| *c /= total);
        }
        CdfTable { grid, cdf }
    }

    pub fn eval(&self, v: f64) -> f64 {
        let n = self.grid.len();
        if n == 0 || v <= self.grid[0] {
            return 0.0;
        }
        if v >= self.grid[n - 1] {
            return 1.0;
        }
        let i = self.grid.partition_point(|&g| g <= v);
        let (x0, x1) = (self.grid[i - 1], self.grid[i]);
        let t = (v - x0) / (x1 - x0);
        self.cdf[i - 1] + t * (self.cdf[i] - self.cdf[i - 1])
    }

    /// Inverse CDF by linear interpolation, for `p` in `[0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.grid.len();
        let i = self.cdf.partition_point(|&c| c < p).clamp(1, n - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let t = if c1 > c0 { (p - c0) / (c1 - c0) } else { 0.0 };
        self.grid[i - 1] + t * (self.grid[i] - self.grid[i - 1])
    }
}

/// A density tabulated on an ascending grid, analytic or empirical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PapCurve {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub family: Option<PapFamily>,
    pub params: Option<PapParams>,
}

impl PapCurve {
    pub fn tabulate(family: PapFamily, params: &PapParams, grid: Vec<f64>) -> Result<Self> {
        let d = PapDensity::new(family, *params)?;
        let density = grid.iter().map(|&v| d.density(v)).collect();
        Ok(PapCurve {
            grid,
            density,
            family: Some(family),
            params: Some(*params),
        })
    }

    /// Tabulates on `points` nodes spanning the effective support.
    pub fn covering(family: PapFamily, params: &PapParams, points: usize) -> Result<Self> {
        let d = PapDensity::new(family, *params)?;
        let (a, b) = d.effective_range();
        Self::tabulate(family, params, linspace(a, b, points))
    }

    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }

    pub fn cdf(&self) -> Vec<f64> {
        cumulative_trapezoid(&self.grid, &self.density)
    }

    /// Writes `v,density` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "v,density")?;
        for (v, p) in self.grid.iter().zip(&self.density) {
            writeln!(out, "{v:.16e},{p:.16e}")?;
        }
        Ok(())
    }
}
