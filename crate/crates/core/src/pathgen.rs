//! Direct generation of discretised trajectories.
//!
//! A unit trajectory `q_0 .. q_N` (with `q_0 = q_N = 0`) is drawn from
//!
//! ```text
//! P[q] ~ exp(-(N/2) sum_{k=1}^{N} [ (q_k - q_{k-1})^2 + alpha q_k^2 + 2 beta q_k ])
//! ```
//!
//! by non-orthogonal diagonalisation of the tridiagonal quadratic form.
//! Eliminating from the far end gives coefficients `C_k = C_1 - 1/C_{k-1}`
//! with `C_1 = 2 + alpha` and drifts `beta_k = beta + beta_{k-1}/C_{k-1}`,
//! after which the path is built in one forward pass:
//!
//! ```text
//! q_i = qbar_i + (q_{i-1} - beta_{N-i}) / C_{N-i},   qbar_i ~ N(0, 1/(N C_{N-i}))
//! ```
//!
//! The harmonic background sets `alpha = Omega^2 T^2 / N^2`, the linear
//! background sets `beta = kappa T^{3/2} / (sqrt(m) N^2)`, and free paths use
//! `alpha = beta = 0`. Cost is O(N) per axis.

use std::io::{self, Write};

use crate::model::{BackgroundSpec, SimConfig};
use crate::randomness::StreamKey;

/// Variance of the raw draws `omega_i`, whose weight is `exp(-omega^2)`.
pub const DRAW_VARIANCE: f64 = 0.5;

/// Forward-elimination coefficients `C_1 .. C_{N-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EliminationCoefficients {
    values: Vec<f64>,
    alpha: f64,
}

impl EliminationCoefficients {
    /// `C_k` for `1 <= k <= N - 1`.
    #[inline]
    pub fn get(&self, k: usize) -> f64 {
        self.values[k - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn elimination_coefficients(alpha: f64, n_points: usize) -> EliminationCoefficients {
    assert!(n_points >= 2, "n_points must be at least 2");
    let first = 2.0 + alpha;
    let mut values = Vec::with_capacity(n_points - 1);
    values.push(first);
    for k in 1..n_points - 1 {
        let prev = values[k - 1];
        values.push(first - 1.0 / prev);
    }
    EliminationCoefficients { values, alpha }
}

/// Drift terms `beta_1 .. beta_{N-1}` of the linear-background elimination.
/// For `alpha = 0` these are `(k + 1) beta / 2`.
pub fn drift_coefficients(beta: f64, coefficients: &EliminationCoefficients) -> Vec<f64> {
    let mut drift = Vec::with_capacity(coefficients.len());
    if coefficients.is_empty() {
        return drift;
    }
    drift.push(beta);
    for k in 1..coefficients.len() {
        let prev = drift[k - 1];
        drift.push(beta + prev / coefficients.values[k - 1]);
    }
    drift
}

/// Constant `sum_{k=1}^{N-1} beta_k^2 / C_k` left over by completing the
/// square for the free-plus-drift form; equals `beta^2 N (N+1) (N-1) / 12`.
pub fn drift_completion_sum(beta: f64, n_points: usize) -> f64 {
    let coefficients = elimination_coefficients(0.0, n_points);
    drift_coefficients(beta, &coefficients)
        .iter()
        .zip(coefficients.values())
        .map(|(b, c)| b * b / c)
        .sum()
}

/// `alpha = Omega^2 T^2 / N^2`; independent of the mass.
pub fn alpha_from_omega(omega_bg: f64, time: f64, n_points: usize) -> f64 {
    let n = n_points as f64;
    omega_bg * omega_bg * time * time / (n * n)
}

/// Per-step drift applied to unit trajectories for a linear background,
/// `kappa T^{3/2} / (sqrt(m) N^2)`.
pub fn beta_effective_from_kappa(kappa_bg: f64, time: f64, mass: f64, n_points: usize) -> f64 {
    let n = n_points as f64;
    kappa_bg * time * time.sqrt() / (mass.sqrt() * n * n)
}

/// Dimensionless fluctuation with Dirichlet boundary conditions.
/// Points are stored node-major: `points[k * D + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitPath {
    dimension: usize,
    n_points: usize,
    points: Vec<f64>,
}

/// Trajectory in physical coordinates at times `u_k = k / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalPath {
    dimension: usize,
    n_points: usize,
    points: Vec<f64>,
}

macro_rules! path_accessors {
    ($ty:ty) => {
        impl $ty {
            pub fn zeros(dimension: usize, n_points: usize) -> Self {
                Self {
                    dimension,
                    n_points,
                    points: vec![0.0; dimension * (n_points + 1)],
                }
            }

            pub fn from_points(dimension: usize, points: Vec<f64>) -> Self {
                assert!(dimension >= 1 && points.len() % dimension == 0);
                let nodes = points.len() / dimension;
                assert!(nodes >= 3, "a path needs at least 3 nodes");
                Self {
                    dimension,
                    n_points: nodes - 1,
                    points,
                }
            }

            pub fn dimension(&self) -> usize {
                self.dimension
            }

            /// Number of steps `N`; there are `N + 1` nodes.
            pub fn n_points(&self) -> usize {
                self.n_points
            }

            #[inline]
            pub fn point(&self, k: usize) -> &[f64] {
                &self.points[k * self.dimension..(k + 1) * self.dimension]
            }

            pub fn points(&self) -> &[f64] {
                &self.points
            }

            pub fn axis(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
                self.points.iter().skip(j).step_by(self.dimension).copied()
            }

            pub fn time(&self, k: usize) -> f64 {
                k as f64 / self.n_points as f64
            }
        }
    };
}

path_accessors!(UnitPath);
path_accessors!(PhysicalPath);

#[derive(Debug, Clone)]
struct AxisSampler {
    /// `sqrt(2 / (N C_{N-i}))` for `i = 1 .. N-1`.
    scales: Vec<f64>,
    /// `1 / C_{N-i}`.
    inverse: Vec<f64>,
    /// `beta_{N-i}`; empty for zero drift.
    drift: Vec<f64>,
}

impl AxisSampler {
    fn new(alpha: f64, beta: f64, n_points: usize) -> Self {
        let coefficients = elimination_coefficients(alpha, n_points);
        let n = n_points as f64;
        let reversed = |i: usize| n_points - i;
        let scales = (1..n_points)
            .map(|i| (2.0 / (n * coefficients.get(reversed(i)))).sqrt())
            .collect();
        let inverse = (1..n_points)
            .map(|i| 1.0 / coefficients.get(reversed(i)))
            .collect();
        let drift = if beta == 0.0 {
            Vec::new()
        } else {
            let all = drift_coefficients(beta, &coefficients);
            (1..n_points).map(|i| all[reversed(i) - 1]).collect()
        };
        AxisSampler {
            scales,
            inverse,
            drift,
        }
    }
}

/// Precomputed sampler for one `(config, background)` pair.
#[derive(Debug, Clone)]
pub struct PathGenerator {
    dimension: usize,
    n_points: usize,
    axes: Vec<AxisSampler>,
}

impl PathGenerator {
    pub fn new(config: &SimConfig, background: &BackgroundSpec) -> Self {
        let n = config.n_points;
        let axes = (0..config.dimension)
            .map(|j| match background {
                BackgroundSpec::None => AxisSampler::new(0.0, 0.0, n),
                BackgroundSpec::Harmonic { frequency, .. } => {
                    AxisSampler::new(alpha_from_omega(frequency[j], config.time, n), 0.0, n)
                }
                BackgroundSpec::Linear { slope } => AxisSampler::new(
                    0.0,
                    beta_effective_from_kappa(slope[j], config.time, config.mass, n),
                    n,
                ),
            })
            .collect();
        PathGenerator {
            dimension: config.dimension,
            n_points: n,
            axes,
        }
    }

    /// Generator with the same `alpha` and `beta` on every axis.
    pub fn from_coefficients(dimension: usize, n_points: usize, alpha: f64, beta: f64) -> Self {
        PathGenerator {
            dimension,
            n_points,
            axes: vec![AxisSampler::new(alpha, beta, n_points); dimension],
        }
    }

    pub fn blank(&self) -> UnitPath {
        UnitPath::zeros(self.dimension, self.n_points)
    }

    pub fn generate(&self, key: StreamKey) -> UnitPath {
        let mut path = self.blank();
        self.generate_into(key, &mut path);
        path
    }

    /// Overwrites `path` with the trajectory for `key`; axis `j` reads the
    /// stream `key.with_axis(j)`.
    pub fn generate_into(&self, key: StreamKey, path: &mut UnitPath) {
        let d = self.dimension;
        let n = self.n_points;
        debug_assert_eq!(path.points.len(), d * (n + 1));
        for (j, axis) in self.axes.iter().enumerate() {
            let mut draws = key.with_axis(j as u32).gaussians(DRAW_VARIANCE);
            path.points[j] = 0.0;
            let mut previous = 0.0;
            for i in 1..n {
                let omega = draws.next().unwrap_or_default();
                let bar = axis.scales[i - 1] * omega;
                let carried = match axis.drift.get(i - 1) {
                    Some(beta) => previous - beta,
                    None => previous,
                };
                let q = bar + carried * axis.inverse[i - 1];
                path.points[i * d + j] = q;
                previous = q;
            }
            path.points[n * d + j] = 0.0;
        }
    }
}

/// One trajectory under the background's Gaussian weight.
pub fn generate_unit_path(config: &SimConfig, background: &BackgroundSpec, key: StreamKey) -> UnitPath {
    PathGenerator::new(config, background).generate(key)
}

/// Maps unit fluctuations onto physical paths: `x_k = base_k + sqrt(T/m) q_k`.
#[derive(Debug, Clone)]
pub struct Embedding {
    dimension: usize,
    n_points: usize,
    base: Vec<f64>,
    scale: f64,
}

impl Embedding {
    /// Straight line `(1 - u) x + u y`.
    pub fn straight_line(config: &SimConfig) -> Self {
        let d = config.dimension;
        let n = config.n_points;
        let mut base = vec![0.0; d * (n + 1)];
        for k in 0..=n {
            let u = k as f64 / n as f64;
            for j in 0..d {
                base[k * d + j] = (1.0 - u) * config.x_start[j] + u * config.x_end[j];
            }
        }
        // exact endpoints
        base[..d].copy_from_slice(&config.x_start);
        base[n * d..].copy_from_slice(&config.x_end);
        Embedding {
            dimension: d,
            n_points: n,
            base,
            scale: config.fluctuation_scale(),
        }
    }

    /// Base path matching the sampled ensemble. A harmonic background adds a
    /// term linear in `q` unless the path is expanded about the discrete
    /// classical path of the background, so that path is used there; other
    /// backgrounds use the straight line. When both endpoints sit at the
    /// background centre the two coincide.
    pub fn for_background(config: &SimConfig, background: &BackgroundSpec) -> Self {
        let mut embedding = Embedding::straight_line(config);
        if let BackgroundSpec::Harmonic { frequency, center } = background {
            let d = config.dimension;
            let n = config.n_points;
            for j in 0..d {
                let alpha = alpha_from_omega(frequency[j], config.time, n);
                let path = discrete_classical_path(
                    alpha,
                    center[j],
                    config.x_start[j],
                    config.x_end[j],
                    n,
                );
                for (k, value) in path.into_iter().enumerate() {
                    embedding.base[k * d + j] = value;
                }
            }
        }
        embedding
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn embed(&self, q: &UnitPath) -> PhysicalPath {
        let mut x = PhysicalPath::zeros(self.dimension, self.n_points);
        self.embed_into(q, &mut x);
        x
    }

    pub fn embed_into(&self, q: &UnitPath, x: &mut PhysicalPath) {
        assert_eq!(q.points.len(), self.base.len(), "path shape mismatch");
        for ((out, base), fluct) in x.points.iter_mut().zip(&self.base).zip(&q.points) {
            *out = base + self.scale * fluct;
        }
    }
}

/// Minimiser of the discretised harmonic-background action with fixed
/// endpoints: `(2 + alpha) x_k - x_{k-1} - x_{k+1} = alpha c` on the
/// interior. Solved by the Thomas algorithm.
fn discrete_classical_path(alpha: f64, center: f64, start: f64, end: f64, n: usize) -> Vec<f64> {
    let mut path = vec![0.0; n + 1];
    path[0] = start;
    path[n] = end;
    let interior = n - 1;
    let diag = 2.0 + alpha;
    let mut c_prime = vec![0.0; interior];
    let mut d_prime = vec![0.0; interior];
    for i in 0..interior {
        let mut rhs = alpha * center;
        if i == 0 {
            rhs += start;
        }
        if i == interior - 1 {
            rhs += end;
        }
        if i == 0 {
            c_prime[0] = -1.0 / diag;
            d_prime[0] = rhs / diag;
        } else {
            let m = diag + c_prime[i - 1];
            c_prime[i] = -1.0 / m;
            d_prime[i] = (rhs + d_prime[i - 1]) / m;
        }
    }
    // the end point is already folded into the last right-hand side
    let mut next = 0.0;
    for i in (0..interior).rev() {
        let value = d_prime[i] - c_prime[i] * next;
        path[i + 1] = value;
        next = value;
    }
    path
}

/// Straight-line embedding `x(u) = (1 - u) x + u y + sqrt(T/m) q(u)`.
pub fn embed_path(q: &UnitPath, config: &SimConfig) -> PhysicalPath {
    Embedding::straight_line(config).embed(q)
}

/// Embedding consistent with trajectories drawn in `background`.
pub fn embed_path_in_background(
    q: &UnitPath,
    config: &SimConfig,
    background: &BackgroundSpec,
) -> PhysicalPath {
    Embedding::for_background(config, background).embed(q)
}

/// Writes `trajectory_id,k,u_k,x_1..x_D` rows.
pub fn write_paths_csv<'a, W: Write>(
    mut out: W,
    paths: impl IntoIterator<Item = (u64, &'a PhysicalPath)>,
) -> io::Result<()> {
    let mut header_written = false;
    for (id, path) in paths {
        if !header_written {
            write!(out, "trajectory_id,k,u_k")?;
            for j in 1..=path.dimension() {
                write!(out, ",x_{j}")?;
            }
            writeln!(out)?;
            header_written = true;
        }
        for k in 0..=path.n_points() {
            write!(out, "{id},{k},{:.16e}", path.time(k))?;
            for value in path.point(k) {
                write!(out, ",{value:.16e}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_coefficients_are_ratios() {
        let c = elimination_coefficients(0.0, 50);
        for k in 1..50 {
            let expected = (k + 1) as f64 / k as f64;
            assert!((c.get(k) - expected).abs() < 1e-14, "C_{k}");
        }
        assert_eq!(c.get(1), 2.0);
        assert_eq!(c.get(2), 1.5);
    }

    #[test]
    fn unit_alpha_coefficients() {
        let c = elimination_coefficients(1.0, 10);
        assert_eq!(c.get(1), 3.0);
        assert!((c.get(2) - 8.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn coefficients_converge_to_fixed_point() {
        let alpha = 0.01;
        let c = elimination_coefficients(alpha, 2000);
        let b = 2.0 + alpha;
        let fixed = (b + (b * b - 4.0f64).sqrt()) / 2.0;
        assert!((c.get(1999) - fixed).abs() < 1e-12);
        assert!(c.values().iter().all(|&v| v > 1.0 && v <= b));
    }

    #[test]
    fn alpha_examples() {
        assert!((alpha_from_omega(0.75, 40.0, 5000) - 3.6e-5).abs() < 1e-18);
        assert_eq!(alpha_from_omega(0.0, 40.0, 5000), 0.0);
        assert_eq!(alpha_from_omega(1.0, 5000.0, 5000), 1.0);
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta_effective_from_kappa(0.0, 15.0, 1.0, 5000), 0.0);
        let beta = beta_effective_from_kappa(0.48, 15.0, 1.0, 5000);
        assert!((beta - 1.1154e-6).abs() < 1e-10, "{beta}");
        let doubled = beta_effective_from_kappa(0.96, 15.0, 1.0, 5000);
        assert!((doubled - 2.0 * beta).abs() < 1e-22);
    }

    #[test]
    fn free_drift_matches_closed_form() {
        let beta = 0.3;
        let c = elimination_coefficients(0.0, 40);
        let drift = drift_coefficients(beta, &c);
        for (k, value) in drift.iter().enumerate() {
            let expected = (k + 2) as f64 * beta / 2.0;
            assert!((value - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn completion_sum_closed_form() {
        let beta = 0.02;
        for n in [2usize, 3, 16, 500] {
            let nf = n as f64;
            let expected = beta * beta * nf * (nf + 1.0) * (nf - 1.0) / 12.0;
            let got = drift_completion_sum(beta, n);
            assert!((got - expected).abs() < 1e-12 * expected.max(1e-300), "n={n}");
        }
        // Continuum value kappa^2 T^3 / (24 m) for the exponent (N/2) * sum.
        let (kappa, t, m, n) = (0.45, 15.0, 2.0, 4000usize);
        let b = beta_effective_from_kappa(kappa, t, m, n);
        let constant = 0.5 * n as f64 * drift_completion_sum(b, n);
        let continuum = kappa * kappa * t * t * t / (24.0 * m);
        assert!((constant / continuum - 1.0).abs() < 1e-5);
    }

    #[test]
    fn dirichlet_boundaries_are_exact() {
        let config = SimConfig::origin_1d(3.0, 1, 64, 9).with_endpoints(vec![0.1, 0.0], vec![0.3, -1.0]);
        for bg in [
            BackgroundSpec::None,
            BackgroundSpec::Harmonic {
                frequency: vec![0.75, 2.0],
                center: vec![0.0, 1.0],
            },
            BackgroundSpec::Linear {
                slope: vec![0.45, -1.0],
            },
        ] {
            let q = generate_unit_path(&config, &bg, StreamKey::new(1, 2, 0));
            assert!(q.point(0).iter().all(|&v| v == 0.0));
            assert!(q.point(64).iter().all(|&v| v == 0.0));
            let x = embed_path_in_background(&q, &config, &bg);
            assert_eq!(x.point(0), &config.x_start[..]);
            assert_eq!(x.point(64), &config.x_end[..]);
        }
    }

    #[test]
    fn zero_frequency_background_is_free() {
        let config = SimConfig::origin_1d(4.0, 1, 32, 0);
        let bg = BackgroundSpec::harmonic_1d(0.0);
        for t in 0..20 {
            let key = StreamKey::new(3, t, 0);
            let a = generate_unit_path(&config, &BackgroundSpec::None, key);
            let b = generate_unit_path(&config, &bg, key);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let config = SimConfig::origin_1d(4.0, 1, 100, 0);
        let bg = BackgroundSpec::linear_1d(0.5);
        let key = StreamKey::new(3, 77, 0);
        assert_eq!(
            generate_unit_path(&config, &bg, key),
            generate_unit_path(&config, &bg, key)
        );
    }

    #[test]
    fn embedding_examples() {
        let config = SimConfig::origin_1d(4.0, 1, 8, 0).with_endpoints(vec![1.0], vec![3.0]);
        let zero = UnitPath::zeros(1, 8);
        let line = embed_path(&zero, &config);
        for k in 0..=8 {
            let u = k as f64 / 8.0;
            assert!((line.point(k)[0] - (1.0 + 2.0 * u)).abs() < 1e-15);
        }

        let config = SimConfig::origin_1d(4.0, 1, 16, 0);
        let q = generate_unit_path(&config, &BackgroundSpec::None, StreamKey::new(0, 0, 0));
        let x = embed_path(&q, &config);
        for k in 0..=16 {
            assert_eq!(x.point(k)[0], 2.0 * q.point(k)[0]);
        }
        let heavy = embed_path(&q, &config.with_mass(4.0));
        for k in 0..=16 {
            assert!((heavy.point(k)[0] - 0.5 * x.point(k)[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn classical_path_solves_discrete_equation() {
        let (alpha, c, a, b, n) = (0.04, 0.5, 1.0, -2.0, 40);
        let p = discrete_classical_path(alpha, c, a, b, n);
        for k in 1..n {
            let residual = (2.0 + alpha) * p[k] - p[k - 1] - p[k + 1] - alpha * c;
            assert!(residual.abs() < 1e-13);
        }
        let at_center = discrete_classical_path(alpha, c, c, c, n);
        assert!(at_center.iter().all(|v| (v - c).abs() < 1e-14));
    }

    #[test]
    fn path_csv_layout() {
        let config = SimConfig::origin_1d(1.0, 1, 2, 0).with_endpoints(vec![0.0, 1.0], vec![0.0, 1.0]);
        let x = embed_path(&UnitPath::zeros(2, 2), &config);
        let mut buf = Vec::new();
        write_paths_csv(&mut buf, [(5u64, &x)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "trajectory_id,k,u_k,x_1,x_2");
        assert_eq!(lines.len(), 4);
        assert!(lines[2].starts_with("5,1,5.0000000000000000e-1,"));
    }
}
