//! Browser bindings. Each operation takes a JSON request and returns a JSON
//! response, so the page needs no generated type glue. The plain Rust
//! functions are tested natively; the `#[wasm_bindgen]` wrappers only
//! convert errors.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use wmc::analysis::{histogram, ks_test};
use wmc::kernels::ln_kernel_exact;
use wmc::pap::{PapDensity, PapFamily, PapParams};
use wmc::wilson::{sample_paths as core_sample_paths, sample_wilson_lines};
use wmc::{validate, BackgroundSpec, EstimatorOptions, MethodSpec, PotentialSpec, RunSpec, SimConfig, WilsonKind};

/// Hard caps keep a click from freezing the tab.
const MAX_WORK: usize = 20_000_000;

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum System {
    Harmonic,
    Linear,
}

#[derive(Debug, Deserialize)]
pub struct OverlayRequest {
    system: System,
    /// `omega` or `k`.
    strength: f64,
    /// `Omega` or `kappa`; 0 samples free trajectories.
    background: f64,
    subtracted: bool,
    time: f64,
    n_paths: usize,
    n_points: usize,
    bins: usize,
    seed: u64,
}

#[derive(Debug, Serialize)]
pub struct OverlayResponse {
    family: String,
    centers: Vec<f64>,
    empirical: Vec<f64>,
    analytic: Vec<f64>,
    ks_statistic: f64,
    ks_threshold: f64,
    ks_pass: bool,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum PotentialRequest {
    Free,
    Harmonic { omega: f64 },
    Linear { k: f64 },
    PoschlTeller { alpha: f64 },
    Absolute { g: f64 },
}

impl PotentialRequest {
    fn spec(&self) -> PotentialSpec {
        match *self {
            PotentialRequest::Free => PotentialSpec::Free,
            PotentialRequest::Harmonic { omega } => PotentialSpec::Harmonic { omega },
            PotentialRequest::Linear { k } => PotentialSpec::Linear { slope: k },
            PotentialRequest::PoschlTeller { alpha } => PotentialSpec::PoschlTeller { alpha, lambda: 1 },
            PotentialRequest::Absolute { g } => PotentialSpec::AbsoluteValue { strength: g },
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct SweepRequest {
    potential: PotentialRequest,
    /// Harmonic background frequency; 0 means plain free-path sampling.
    background_omega: f64,
    t_start: f64,
    t_stop: f64,
    t_count: usize,
    n_paths: usize,
    n_points: usize,
    seed: u64,
}

#[derive(Debug, Serialize)]
pub struct SweepPoint {
    time: f64,
    log_k: Option<f64>,
    log_k_err: Option<f64>,
    exact_log_k: Option<f64>,
    error: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct PathsRequest {
    time: f64,
    background_omega: f64,
    count: usize,
    n_points: usize,
    seed: u64,
}

#[derive(Debug, Serialize)]
pub struct PathsResponse {
    u: Vec<f64>,
    paths: Vec<Vec<f64>>,
}

fn parse<'a, T: Deserialize<'a>>(json: &'a str) -> Result<T, String> {
    serde_json::from_str(json).map_err(|e| format!("bad request: {e}"))
}

fn budget(n_paths: usize, n_points: usize, repeats: usize) -> Result<(), String> {
    if n_paths.saturating_mul(n_points).saturating_mul(repeats) > MAX_WORK {
        return Err(format!("request too large: keep paths x points x times under {MAX_WORK}"));
    }
    Ok(())
}

fn harmonic_background(omega: f64) -> BackgroundSpec {
    if omega > 0.0 {
        BackgroundSpec::harmonic_1d(omega)
    } else {
        BackgroundSpec::None
    }
}

/// Wilson-line histogram against the matching analytic density.
pub fn pap_overlay(json: &str) -> Result<String, String> {
    let req: OverlayRequest = parse(json)?;
    budget(req.n_paths, req.n_points, 1)?;
    let config = SimConfig::origin_1d(req.time, req.n_paths, req.n_points, req.seed);
    let sampled = req.background != 0.0;
    let (potential, background, params, family) = match req.system {
        System::Harmonic => (
            PotentialSpec::Harmonic { omega: req.strength },
            harmonic_background(req.background),
            PapParams::harmonic(req.strength, req.background, req.time),
            if !sampled {
                PapFamily::Base
            } else if req.subtracted {
                PapFamily::Tilde
            } else {
                PapFamily::Omega
            },
        ),
        System::Linear => (
            PotentialSpec::Linear { slope: req.strength },
            if sampled { BackgroundSpec::linear_1d(req.background) } else { BackgroundSpec::None },
            PapParams::linear(req.strength, req.background, req.time),
            if !sampled {
                PapFamily::Base
            } else if req.subtracted {
                PapFamily::Hat
            } else {
                PapFamily::Kappa
            },
        ),
    };
    let method = if !sampled {
        MethodSpec::Plain
    } else if req.subtracted {
        MethodSpec::Subtracted
    } else {
        MethodSpec::Compensated
    };
    let run = validate(config, potential, background, method).map_err(|e| e.to_string())?;
    let density = PapDensity::new(family, params).map_err(|e| e.to_string())?;
    let samples: Vec<f64> = sample_wilson_lines(&run, WilsonKind::Raw, 1)
        .map_err(|e| e.to_string())?
        .values
        .into_iter()
        .map(|v| density.transform(v))
        .collect();
    let hist = histogram(&samples, req.bins).map_err(|e| e.to_string())?;
    let cdf = density.cdf_table(8_001);
    let report = ks_test(&samples, |v| cdf.eval(v), 0.01).map_err(|e| e.to_string())?;
    let response = OverlayResponse {
        family: family.name().to_string(),
        analytic: hist.grid.iter().map(|&v| density.density(v)).collect(),
        centers: hist.grid,
        empirical: hist.density,
        ks_statistic: report.value,
        ks_threshold: report.threshold,
        ks_pass: report.pass,
    };
    Ok(serde_json::to_string(&response).expect("plain record"))
}

/// `ln K(T)` over a grid, with the closed form where one exists.
pub fn kernel_sweep(json: &str) -> Result<String, String> {
    let req: SweepRequest = parse(json)?;
    budget(req.n_paths, req.n_points, req.t_count)?;
    if req.t_count == 0 || !(req.t_stop >= req.t_start) {
        return Err("need t_count >= 1 and t_stop >= t_start".into());
    }
    let potential = req.potential.spec();
    let background = harmonic_background(req.background_omega);
    let method = if background.is_none() { MethodSpec::Plain } else { MethodSpec::Subtracted };
    let config = SimConfig::origin_1d(req.t_start, req.n_paths, req.n_points, req.seed);
    let run: RunSpec = validate(config, potential, background, method).map_err(|e| e.to_string())?;
    let grid = wmc::numerics::linspace(req.t_start, req.t_stop, req.t_count);
    let table = wmc::sweep(&run, &grid, &EstimatorOptions { workers: 1 }).map_err(|e| e.to_string())?;
    let points: Vec<SweepPoint> = table
        .rows
        .iter()
        .map(|row| {
            let log = row.log();
            SweepPoint {
                time: row.time,
                log_k: log.map(|l| l.0),
                log_k_err: log.map(|l| l.1),
                exact_log_k: ln_kernel_exact(&run.config.with_time(row.time), &potential),
                error: row.error.clone(),
            }
        })
        .collect();
    Ok(serde_json::to_string(&points).expect("plain record"))
}

/// A few physical trajectories from the origin back to the origin.
pub fn sample_paths(json: &str) -> Result<String, String> {
    let req: PathsRequest = parse(json)?;
    budget(req.count, req.n_points, 1)?;
    let config = SimConfig::origin_1d(req.time, req.count.max(1), req.n_points, req.seed);
    let background = harmonic_background(req.background_omega);
    let method = if background.is_none() { MethodSpec::Plain } else { MethodSpec::Subtracted };
    let run = validate(config, PotentialSpec::Free, background, method).map_err(|e| e.to_string())?;
    let paths = core_sample_paths(&run, req.count);
    let response = PathsResponse {
        u: (0..=req.n_points).map(|k| k as f64 / req.n_points as f64).collect(),
        paths: paths.iter().map(|p| (0..=p.n_points()).map(|k| p.point(k)[0]).collect()).collect(),
    };
    Ok(serde_json::to_string(&response).expect("plain record"))
}

#[wasm_bindgen(js_name = papOverlay)]
pub fn pap_overlay_js(json: &str) -> Result<String, JsError> {
    pap_overlay(json).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = kernelSweep)]
pub fn kernel_sweep_js(json: &str) -> Result<String, JsError> {
    kernel_sweep(json).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = samplePaths)]
pub fn sample_paths_js(json: &str) -> Result<String, JsError> {
    sample_paths(json).map_err(|e| JsError::new(&e))
}
