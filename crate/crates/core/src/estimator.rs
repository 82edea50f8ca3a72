//! Monte Carlo kernel estimators and sweeps over the propagation time.
//!
//! Every estimator has the form `K_ref * mean(exp(-w_i))` for per-trajectory
//! exponents `w_i`:
//!
//! | method      | `K_ref` | `w_i`                       |
//! |-------------|---------|-----------------------------|
//! | plain       | `K_0`   | `v_i`                       |
//! | compensated | `K_U`   | `(1 - mu) v_i` (`U = mu V`) |
//! | subtracted  | `K_U`   | `nu_i`                      |
//!
//! The compensated row is `K_0 * mean(exp(-v) / F(v))` with
//! `F = (K_0 / K_U) exp(-mu v)` folded in. Sums are shifted by the smallest
//! exponent before exponentiation so heavy tails cannot overflow.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{ln_kernel_background, ln_kernel_free};
use crate::model::{validate, BackgroundSpec, MethodSpec, PotentialSpec, RunSpec, SimConfig};
use crate::numerics::CompensatedSum;
use crate::pap::compensation_factor;
use crate::randomness::derive_seed;
use crate::wilson::{sample_wilson_lines, WilsonKind};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorOptions {
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelEstimate {
    pub value: f64,
    /// Sample standard deviation of the summands over `sqrt(N_L)`; infinite
    /// for a single trajectory.
    pub std_error: f64,
    pub n_paths: usize,
    pub method: MethodSpec,
    pub time: f64,
}

impl KernelEstimate {
    /// `(ln K, sigma_K / K)` when the estimate is more than two standard
    /// errors above zero.
    pub fn log(&self) -> Option<(f64, f64)> {
        (self.value > 2.0 * self.std_error).then(|| (self.value.ln(), self.std_error / self.value))
    }
}

/// Mean and standard error of `exp(-w_i)`, scaled by `exp(ln_ref)`.
fn weighted_mean(ln_ref: f64, exponents: &[f64]) -> Result<(f64, f64)> {
    let n = exponents.len();
    if n == 0 {
        return Err(Error::EmptySampleSet);
    }
    let shift = exponents.iter().cloned().fold(f64::INFINITY, f64::min);
    if !shift.is_finite() {
        return Err(Error::InvalidArgument("non-finite Wilson line value".into()));
    }
    let mut sum = CompensatedSum::new();
    for w in exponents {
        sum.add((shift - w).exp());
    }
    let mean = sum.value() / n as f64;
    let std_error = if n == 1 {
        f64::INFINITY
    } else {
        let mut sq = CompensatedSum::new();
        for w in exponents {
            let d = (shift - w).exp() - mean;
            sq.add(d * d);
        }
        (sq.value() / (n - 1) as f64 / n as f64).sqrt()
    };
    let scale = ln_ref - shift;
    Ok((mean * scale.exp(), if std_error.is_finite() { std_error * scale.exp() } else { std_error }))
}

fn finish(run: &RunSpec, ln_ref: f64, exponents: &[f64]) -> Result<KernelEstimate> {
    let (value, std_error) = weighted_mean(ln_ref, exponents)?;
    Ok(KernelEstimate {
        value,
        std_error,
        n_paths: exponents.len(),
        method: run.method,
        time: run.config.time,
    })
}

/// Runs a validated bundle with its own method.
pub fn estimate(run: &RunSpec, options: &EstimatorOptions) -> Result<KernelEstimate> {
    let config = &run.config;
    match run.method {
        MethodSpec::Plain => {
            let set = sample_wilson_lines(run, WilsonKind::Raw, options.workers)?;
            finish(run, ln_kernel_free(config), &set.values)
        }
        MethodSpec::Compensated => {
            let factor = compensation_factor(&run.potential, &run.background, config)?;
            let mut set = sample_wilson_lines(run, WilsonKind::Raw, options.workers)?;
            let keep = 1.0 - factor.mu;
            set.values.iter_mut().for_each(|v| *v *= keep);
            finish(run, ln_kernel_background(config, &run.background), &set.values)
        }
        MethodSpec::Subtracted => {
            let set = sample_wilson_lines(run, WilsonKind::Subtracted, options.workers)?;
            finish(run, ln_kernel_background(config, &run.background), &set.values)
        }
    }
}

/// `K_0 * mean(exp(-v_i))` over free trajectories.
pub fn estimate_plain(
    config: &SimConfig,
    potential: &PotentialSpec,
    options: &EstimatorOptions,
) -> Result<KernelEstimate> {
    let run = validate(config.clone(), *potential, BackgroundSpec::None, MethodSpec::Plain)?;
    estimate(&run, options)
}

/// Background trajectories reweighted by the closed-form compensation factor.
pub fn estimate_compensated(
    config: &SimConfig,
    potential: &PotentialSpec,
    background: &BackgroundSpec,
    options: &EstimatorOptions,
) -> Result<KernelEstimate> {
    compensation_factor(potential, background, config)?;
    let run = validate(config.clone(), *potential, background.clone(), MethodSpec::Compensated)?;
    estimate(&run, options)
}

/// `K_U * mean(exp(-nu_i))` over background trajectories.
pub fn estimate_subtracted(
    config: &SimConfig,
    potential: &PotentialSpec,
    background: &BackgroundSpec,
    options: &EstimatorOptions,
) -> Result<KernelEstimate> {
    if background.is_none() {
        return Err(Error::SubtractionWithoutBackground);
    }
    let run = validate(config.clone(), *potential, background.clone(), MethodSpec::Subtracted)?;
    estimate(&run, options)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub time: f64,
    pub estimate: Option<KernelEstimate>,
    /// Set when this row failed; other rows are unaffected.
    pub error: Option<String>,
}

impl SweepRow {
    pub fn log(&self) -> Option<(f64, f64)> {
        self.estimate.as_ref().and_then(|e| e.log())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub method: MethodSpec,
    pub potential: PotentialSpec,
    pub background: BackgroundSpec,
}

/// Seed used for row `index` of a sweep with base seed `seed`.
pub fn row_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, index as u64)
}

/// One independent estimate per `T` in `t_grid` (strictly ascending).
/// Row `r` draws from seed `row_seed(seed, r)`.
pub fn sweep(run: &RunSpec, t_grid: &[f64], options: &EstimatorOptions) -> Result<SweepTable> {
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("t_grid is empty".into()));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("t_grid must be strictly ascending".into()));
    }
    let rows = t_grid
        .iter()
        .enumerate()
        .map(|(r, &time)| {
            let config = run.config.with_time(time).with_seed(row_seed(run.config.seed, r));
            let outcome = run
                .with_config(config)
                .revalidate()
                .map_err(Error::from)
                .and_then(|row| estimate(&row, options));
            match outcome {
                Ok(e) => SweepRow {
                    time,
                    estimate: Some(e),
                    error: None,
                },
                Err(e) => SweepRow {
                    time,
                    estimate: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(SweepTable {
        rows,
        method: run.method,
        potential: run.potential,
        background: run.background.clone(),
    })
}

pub const SWEEP_HEADER: &str = "T,K,K_err,logK,logK_err,method,potential,background";

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

impl SweepTable {
    /// CSV with 17 significant digits; failed rows leave the numeric fields
    /// empty, rows with `K <= 2 sigma` leave the log fields empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{SWEEP_HEADER}")?;
        for row in &self.rows {
            let (k, k_err) = match &row.estimate {
                Some(e) => (fmt17(e.value), fmt17(e.std_error)),
                None => (String::new(), String::new()),
            };
            let (lk, lk_err) = match row.log() {
                Some((l, s)) => (fmt17(l), fmt17(s)),
                None => (String::new(), String::new()),
            };
            writeln!(
                out,
                "{},{k},{k_err},{lk},{lk_err},{},{},{}",
                fmt17(row.time),
                self.method,
                self.potential,
                self.background
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// One parsed CSV row; only the numeric columns are kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub time: f64,
    pub value: Option<f64>,
    pub std_error: Option<f64>,
    pub log_value: Option<f64>,
    pub log_std_error: Option<f64>,
}

/// Reads a sweep CSV written by [`SweepTable::write_csv`].
pub fn read_sweep_csv<R: BufRead>(input: R) -> Result<Vec<SweepRecord>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .unwrap_or_default();
    if !header.trim().starts_with("T,K,K_err,logK,logK_err") {
        return Err(Error::InvalidArgument(format!("unexpected sweep header: {header}")));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::InvalidArgument(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 5 {
            return Err(Error::InvalidArgument(format!("row {} has {} fields", i + 2, fields.len())));
        }
        let num = |s: &str| -> Result<Option<f64>> {
            let s = s.trim();
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<f64>()
                    .map(Some)
                    .map_err(|_| Error::InvalidArgument(format!("row {}: bad number `{s}`", i + 2)))
            }
        };
        records.push(SweepRecord {
            time: num(fields[0])?.ok_or_else(|| Error::InvalidArgument(format!("row {}: missing T", i + 2)))?,
            value: num(fields[1])?,
            std_error: num(fields[2])?,
            log_value: num(fields[3])?,
            log_std_error: num(fields[4])?,
        });
    }
    Ok(records)
}

impl SweepTable {
    pub fn records(&self) -> Vec<SweepRecord> {
        self.rows
            .iter()
            .map(|row| {
                let log = row.log();
                SweepRecord {
                    time: row.time,
                    value: row.estimate.as_ref().map(|e| e.value),
                    std_error: row.estimate.as_ref().map(|e| e.std_error),
                    log_value: log.map(|l| l.0),
                    log_std_error: log.map(|l| l.1),
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{kernel_background, kernel_free, kernel_harmonic, kernel_linear};

    fn opts() -> EstimatorOptions {
        EstimatorOptions { workers: 2 }
    }

    #[test]
    fn free_potential_is_exact() {
        let c = SimConfig::origin_1d(3.0, 100, 50, 1);
        let e = estimate_plain(&c, &PotentialSpec::Free, &opts()).unwrap();
        assert_eq!(e.value, kernel_free(&c));
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn zero_variance_identities() {
        let c = SimConfig::origin_1d(10.0, 200, 100, 3);
        let v = PotentialSpec::Harmonic { omega: 1.0 };
        let bg = BackgroundSpec::harmonic_1d(1.0);
        let sub = estimate_subtracted(&c, &v, &bg, &opts()).unwrap();
        assert_eq!(sub.value, kernel_harmonic(&c, 1.0));
        assert_eq!(sub.std_error, 0.0);
        let comp = estimate_compensated(&c, &v, &bg, &opts()).unwrap();
        assert_eq!(comp.value, kernel_harmonic(&c, 1.0));
        let lin = PotentialSpec::Linear { slope: 0.45 };
        let lbg = BackgroundSpec::linear_1d(0.45);
        let comp = estimate_compensated(&c, &lin, &lbg, &opts()).unwrap();
        assert!((comp.value / kernel_linear(&c, 0.45) - 1.0).abs() < 1e-12);
        assert_eq!(comp.std_error, 0.0);
    }

    #[test]
    fn single_path_has_infinite_error() {
        let c = SimConfig::origin_1d(1.0, 1, 20, 0);
        let e = estimate_plain(&c, &PotentialSpec::Harmonic { omega: 1.0 }, &opts()).unwrap();
        assert!(e.std_error.is_infinite());
        assert!(e.log().is_none());
    }

    #[test]
    fn error_kinds() {
        let c = SimConfig::origin_1d(1.0, 10, 20, 0);
        let pt = PotentialSpec::PoschlTeller { alpha: 1.0, lambda: 1 };
        assert!(matches!(
            estimate_subtracted(&c, &pt, &BackgroundSpec::None, &opts()),
            Err(Error::SubtractionWithoutBackground)
        ));
        assert!(matches!(
            estimate_compensated(&c, &pt, &BackgroundSpec::harmonic_1d(1.0), &opts()),
            Err(Error::UnsupportedPair { .. })
        ));
        assert!(matches!(
            estimate_plain(&c.with_time(-1.0), &pt, &opts()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn plain_harmonic_at_short_time() {
        let c = SimConfig::origin_1d(2.0, 100_000, 200, 11);
        let e = estimate_plain(&c, &PotentialSpec::Harmonic { omega: 1.0 }, &EstimatorOptions::default()).unwrap();
        let exact = kernel_harmonic(&c, 1.0);
        assert!((e.value - exact).abs() < 4.0 * e.std_error, "{} vs {exact} +- {}", e.value, e.std_error);
    }

    #[test]
    fn methods_agree_for_harmonic() {
        let v = PotentialSpec::Harmonic { omega: 1.0 };
        let bg = BackgroundSpec::harmonic_1d(0.75);
        for t in [5.0, 20.0, 40.0] {
            let c = SimConfig::origin_1d(t, 20_000, 400, 21);
            let a = estimate_compensated(&c, &v, &bg, &EstimatorOptions::default()).unwrap();
            let b = estimate_subtracted(&c.with_seed(22), &v, &bg, &EstimatorOptions::default()).unwrap();
            let combined = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
            assert!((a.value - b.value).abs() < 4.0 * combined, "T = {t}");
        }
    }

    #[test]
    fn free_sweep_is_exact_per_row() {
        let run = validate(
            SimConfig::origin_1d(1.0, 10, 16, 4),
            PotentialSpec::Free,
            BackgroundSpec::None,
            MethodSpec::Plain,
        )
        .unwrap();
        let table = sweep(&run, &[1.0, 2.0, 4.0], &opts()).unwrap();
        for row in &table.rows {
            let (l, s) = row.log().unwrap();
            assert!((l + 0.5 * (2.0 * std::f64::consts::PI * row.time).ln()).abs() < 1e-14);
            assert_eq!(s, 0.0);
        }
        let single = sweep(&run, &[2.0], &opts()).unwrap();
        assert_eq!(single.rows.len(), 1);
    }

    #[test]
    fn sweep_rejects_bad_grids_and_records_failures() {
        let run = validate(
            SimConfig::origin_1d(1.0, 10, 16, 4),
            PotentialSpec::Harmonic { omega: 1.0 },
            BackgroundSpec::None,
            MethodSpec::Plain,
        )
        .unwrap();
        assert!(sweep(&run, &[], &opts()).is_err());
        assert!(sweep(&run, &[2.0, 1.0], &opts()).is_err());
        let table = sweep(&run, &[-1.0, 1.0], &opts()).unwrap();
        assert!(table.rows[0].error.is_some());
        assert!(table.rows[1].estimate.is_some());
    }

    #[test]
    fn csv_round_trip() {
        let run = validate(
            SimConfig::origin_1d(1.0, 500, 32, 4),
            PotentialSpec::PoschlTeller { alpha: 1.0, lambda: 1 },
            BackgroundSpec::harmonic_1d(0.75),
            MethodSpec::Subtracted,
        )
        .unwrap();
        let table = sweep(&run, &[1.0, 2.0, 3.0], &opts()).unwrap();
        let text = table.to_csv_string();
        assert!(text.starts_with(SWEEP_HEADER));
        assert!(text.lines().nth(1).unwrap().ends_with(",subtracted,poschl_teller:alpha=1;lambda=1,harmonic:omega=0.75;center=0"));
        let parsed = read_sweep_csv(text.as_bytes()).unwrap();
        assert_eq!(parsed, table.records());
        assert!(kernel_background(&run.config, &run.background) > 0.0);
    }
}
