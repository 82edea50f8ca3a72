//! Post-processing: histograms, goodness of fit, exact path moments and
//! ground-state fits.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::SweepRecord;
use crate::numerics::CompensatedSum;
use crate::pap::PapCurve;

/// Density-normalised histogram over `[min, max]` of the samples. Constant
/// samples get a unit-wide range centred on the value.
pub fn histogram(samples: &[f64], n_bins: usize) -> Result<PapCurve> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    if n_bins < 2 {
        return Err(Error::InvalidArgument("need at least 2 bins".into()));
    }
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &s in samples {
        let i = (((s - lo) / width) as usize).min(n_bins - 1);
        counts[i] += 1;
    }
    let norm = samples.len() as f64 * width;
    Ok(PapCurve {
        grid: (0..n_bins).map(|i| lo + (i as f64 + 0.5) * width).collect(),
        density: counts.iter().map(|&c| c as f64 / norm).collect(),
        family: None,
        params: None,
    })
}

/// Bin width of a histogram returned by [`histogram`].
pub fn bin_width(hist: &PapCurve) -> f64 {
    match hist.grid.len() {
        0 | 1 => 1.0,
        n => (hist.grid[n - 1] - hist.grid[0]) / (n - 1) as f64,
    }
}

/// Writes `v,empirical_density,analytic_density` rows.
pub fn write_overlay_csv<W: Write>(mut out: W, hist: &PapCurve, analytic: impl Fn(f64) -> f64) -> io::Result<()> {
    writeln!(out, "v,empirical_density,analytic_density")?;
    for (v, p) in hist.grid.iter().zip(&hist.density) {
        writeln!(out, "{v:.16e},{p:.16e},{:.16e}", analytic(*v))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GofStatistic {
    Ks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub statistic: GofStatistic,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    pub sample_size: usize,
}

impl GofReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain record")
    }
}

/// Asymptotic Kolmogorov critical value `sqrt(-ln(alpha/2) / 2)`.
pub fn ks_critical_value(alpha: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt()
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64, alpha: f64) -> Result<GofReport> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let threshold = ks_critical_value(alpha) / n.sqrt();
    Ok(GofReport {
        statistic: GofStatistic::Ks,
        value: d,
        threshold,
        pass: d < threshold,
        sample_size: sorted.len(),
    })
}

/// Exact Gaussian moments of the interior nodes of a unit trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMoments {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

/// Inverts the tridiagonal precision `N (2 + alpha)` / `-N` of the interior
/// nodes; the drift `beta` shifts the mean by `-beta M^{-1} 1`.
pub fn covariance_oracle(alpha: f64, beta: f64, n_points: usize) -> Result<PathMoments> {
    if !(2..=256).contains(&n_points) {
        return Err(Error::InvalidArgument("n_points must lie in 2..=256".into()));
    }
    let m = n_points - 1;
    let n = n_points as f64;
    let precision = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            n * (2.0 + alpha)
        } else if i.abs_diff(j) == 1 {
            -n
        } else {
            0.0
        }
    });
    let covariance = precision.try_inverse().ok_or(Error::SingularPrecision)?;
    // M mu = -beta 1 with M = precision / N
    let mean = &covariance * DVector::from_element(m, -beta * n);
    Ok(PathMoments { mean, covariance })
}

/// Sample mean and covariance of equally long vectors.
pub fn sample_moments(rows: &[Vec<f64>]) -> Result<PathMoments> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::EmptySampleSet);
    }
    let d = rows[0].len();
    let mut mean = DVector::zeros(d);
    for r in rows {
        mean += DVector::from_column_slice(r);
    }
    mean /= n as f64;
    let mut covariance = DMatrix::zeros(d, d);
    for r in rows {
        let c = DVector::from_column_slice(r) - &mean;
        covariance.ger(1.0, &c, &c, 1.0);
    }
    covariance /= (n - 1) as f64;
    Ok(PathMoments { mean, covariance })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyFit {
    pub e0: f64,
    pub std_error: f64,
    pub window: (f64, f64),
    /// Root mean square of the weighted residuals.
    pub residual_rms: f64,
    pub n_rows_used: usize,
    /// Fitted `ln K` at `T = 0`.
    pub intercept: f64,
}

impl EnergyFit {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain record")
    }
}

/// Weighted straight-line fit `y = a + b x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_error: f64,
    pub intercept_error: f64,
    pub residual_rms: f64,
}

/// Weighted least squares with weights `1 / sigma_i^2`; errors come from the
/// inverse normal matrix.
pub fn weighted_line_fit(x: &[f64], y: &[f64], sigma: &[f64]) -> Result<LineFit> {
    if x.len() < 3 {
        return Err(Error::InsufficientRows { found: x.len() });
    }
    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (
        CompensatedSum::new(),
        CompensatedSum::new(),
        CompensatedSum::new(),
        CompensatedSum::new(),
        CompensatedSum::new(),
    );
    for ((xi, yi), si) in x.iter().zip(y).zip(sigma) {
        let w = 1.0 / (si * si);
        s.add(w);
        sx.add(w * xi);
        sy.add(w * yi);
        sxx.add(w * xi * xi);
        sxy.add(w * xi * yi);
    }
    let (s, sx, sy, sxx, sxy) = (s.value(), sx.value(), sy.value(), sxx.value(), sxy.value());
    let det = s * sxx - sx * sx;
    if !(det > 0.0) {
        return Err(Error::InvalidArgument("degenerate fit abscissae".into()));
    }
    let slope = (s * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let residual_rms = (x
        .iter()
        .zip(y)
        .zip(sigma)
        .map(|((xi, yi), si)| ((yi - intercept - slope * xi) / si).powi(2))
        .sum::<f64>()
        / x.len() as f64)
        .sqrt();
    Ok(LineFit {
        intercept,
        slope,
        slope_error: (s / det).sqrt(),
        intercept_error: (sxx / det).sqrt(),
        residual_rms,
    })
}

/// `E_0 = -d ln K / dT` from the rows with `T` inside `window` and a usable
/// log estimate.
pub fn fit_ground_state(records: &[SweepRecord], window: (f64, f64)) -> Result<EnergyFit> {
    if !(window.0 < window.1) {
        return Err(Error::InvalidArgument("fit window needs T_min < T_max".into()));
    }
    let used: Vec<(f64, f64, f64)> = records
        .iter()
        .filter(|r| r.time >= window.0 && r.time <= window.1)
        .filter_map(|r| match (r.log_value, r.log_std_error) {
            (Some(l), Some(s)) if l.is_finite() && s.is_finite() => Some((r.time, l, s)),
            _ => None,
        })
        .collect();
    if used.len() < 3 {
        return Err(Error::InsufficientRows { found: used.len() });
    }
    let x: Vec<f64> = used.iter().map(|u| u.0).collect();
    let y: Vec<f64> = used.iter().map(|u| u.1).collect();
    // exact rows carry zero error; give them equal weight
    let sigma: Vec<f64> = if used.iter().all(|u| u.2 > 0.0) {
        used.iter().map(|u| u.2).collect()
    } else {
        vec![1.0; used.len()]
    };
    let fit = weighted_line_fit(&x, &y, &sigma)?;
    Ok(EnergyFit {
        e0: -fit.slope,
        std_error: fit.slope_error,
        window,
        residual_rms: fit.residual_rms,
        n_rows_used: used.len(),
        intercept: fit.intercept,
    })
}

/// Delete-one jackknife standard error of the mean.
pub fn jackknife_error(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InvalidArgument("jackknife needs at least 2 values".into()));
    }
    let total: f64 = values.iter().copied().collect::<CompensatedSum>().value();
    let nf = n as f64;
    let leave_out: Vec<f64> = values.iter().map(|v| (total - v) / (nf - 1.0)).collect();
    let mean = leave_out.iter().sum::<f64>() / nf;
    let ss: f64 = leave_out.iter().map(|m| (m - mean).powi(2)).sum();
    Ok(((nf - 1.0) / nf * ss).sqrt())
}

/// Slope of `ln(empirical / reference)` against `v` over bins holding at
/// least `min_count` samples, weighting each bin by its count.
pub fn log_ratio_slope(
    samples: &[f64],
    n_bins: usize,
    reference: impl Fn(f64) -> f64,
    min_count: usize,
) -> Result<LineFit> {
    let hist = histogram(samples, n_bins)?;
    let width = bin_width(&hist);
    let n = samples.len() as f64;
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut sigma = Vec::new();
    for (v, p) in hist.grid.iter().zip(&hist.density) {
        let count = p * n * width;
        let r = reference(*v);
        if count >= min_count as f64 && r > 0.0 {
            x.push(*v);
            y.push((p / r).ln());
            sigma.push(1.0 / count.sqrt());
        }
    }
    weighted_line_fit(&x, &y, &sigma)
}
