use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use wmc::analysis::{fit_ground_state, histogram, ks_test, write_overlay_csv};
use wmc::estimator::read_sweep_csv;
use wmc::pap::{PapDensity, PapFamily, PapParams};
use wmc::pathgen::write_paths_csv;
use wmc::wilson::{sample_paths, sample_wilson_lines};
use wmc::{validate, BackgroundSpec, EstimatorOptions, MethodSpec, PotentialSpec, RunSpec, WilsonKind};

use crate::config::RunConfig;
use crate::manifest::RunManifest;
use crate::CliError;

fn options(cfg: &RunConfig) -> EstimatorOptions {
    EstimatorOptions { workers: cfg.workers }
}

fn run_spec(cfg: &RunConfig, time: f64) -> Result<RunSpec, CliError> {
    Ok(validate(cfg.sim_config(time), cfg.potential, cfg.background.clone(), cfg.method)?)
}

fn required_time(cfg: &RunConfig, command: &str) -> Result<f64, CliError> {
    cfg.time
        .ok_or_else(|| CliError::Config(format!("{command} needs `time`")))
}

fn output_dir(dir: Option<&Path>) -> Result<PathBuf, CliError> {
    let dir = dir.map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn finish(mut out: BufWriter<File>, path: &Path) -> Result<(), CliError> {
    out.flush().map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// One kernel estimate, printed as a JSON line. Files are written only
/// when an output directory is configured or paths are dumped.
pub fn estimate(cfg: &RunConfig, dump_paths: Option<usize>) -> Result<(), CliError> {
    let start = Instant::now();
    let run = run_spec(cfg, required_time(cfg, "estimate")?)?;
    let result = wmc::estimate(&run, &options(cfg))?;
    let line = serde_json::to_string(&result).expect("plain record");
    println!("{line}");

    if cfg.output_dir.is_none() && dump_paths.is_none() {
        return Ok(());
    }
    let dir = output_dir(cfg.output_dir.as_deref())?;
    let mut manifest = RunManifest::new("estimate", Some(cfg));
    let path = dir.join("estimate.json");
    write_text(&path, &(line + "\n"))?;
    manifest.outputs.push(path);
    if let Some(count) = dump_paths {
        let paths = sample_paths(&run, count.min(run.config.n_paths));
        let path = dir.join("paths.csv");
        let mut out = create(&path)?;
        write_paths_csv(&mut out, paths.iter().enumerate().map(|(i, p)| (i as u64, p)))
            .map_err(|e| CliError::io(&path, e))?;
        finish(out, &path)?;
        manifest.outputs.push(path);
    }
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    manifest.write(&dir)?;
    Ok(())
}

pub fn sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let start = Instant::now();
    let grid = cfg
        .t_grid
        .ok_or_else(|| CliError::Config("sweep needs `t_grid`".into()))?
        .points();
    let run = run_spec(cfg, grid[0])?;
    let table = wmc::sweep(&run, &grid, &options(cfg))?;

    let dir = output_dir(cfg.output_dir.as_deref())?;
    let path = dir.join("sweep.csv");
    let mut out = create(&path)?;
    table.write_csv(&mut out).map_err(|e| CliError::io(&path, e))?;
    finish(out, &path)?;
    let failed = table.rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("warning: {failed} of {} rows failed; see the CSV", table.rows.len());
    }
    println!("{}", path.display());

    let mut manifest = RunManifest::new("sweep", Some(cfg));
    manifest.outputs.push(path);
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    manifest.write(&dir)?;
    Ok(())
}

/// Family, parameters and trajectory ensemble for a histogram run.
fn pap_setup(cfg: &RunConfig, time: f64) -> Result<(PapFamily, PapParams), CliError> {
    if cfg.dimension != 1 {
        return Err(CliError::Config("pap-hist needs dimension = 1".into()));
    }
    let single = |v: &[f64], what: &str| match v {
        [x] => Ok(*x),
        _ => Err(CliError::Config(format!("pap-hist needs a single {what}"))),
    };
    let (params, natural) = match (cfg.potential, &cfg.background) {
        (PotentialSpec::Harmonic { omega }, BackgroundSpec::None) => (PapParams::harmonic(omega, 0.0, time), PapFamily::Base),
        (PotentialSpec::Harmonic { omega }, BackgroundSpec::Harmonic { frequency, center }) => {
            if single(center, "background centre")? != 0.0 {
                return Err(CliError::Config("pap-hist needs the harmonic background centred at 0".into()));
            }
            let bg = single(frequency, "background frequency")?;
            let natural = if cfg.method == MethodSpec::Subtracted {
                PapFamily::Tilde
            } else {
                PapFamily::Omega
            };
            (PapParams::harmonic(omega, bg, time), natural)
        }
        (PotentialSpec::Linear { slope }, BackgroundSpec::None) => (PapParams::linear(slope, 0.0, time), PapFamily::Base),
        (PotentialSpec::Linear { slope }, BackgroundSpec::Linear { slope: bg }) => {
            let natural = if cfg.method == MethodSpec::Subtracted {
                PapFamily::Hat
            } else {
                PapFamily::Kappa
            };
            (PapParams::linear(slope, single(bg, "background slope")?, time), natural)
        }
        _ => {
            return Err(CliError::Config(
                "pap-hist needs a harmonic or linear potential with no background or one of the same kind".into(),
            ))
        }
    };
    let family = cfg.pap_family.unwrap_or(natural);
    if (family == PapFamily::Base) != (natural == PapFamily::Base) {
        return Err(CliError::Config(format!(
            "family {family} does not match background {}",
            cfg.background.name()
        )));
    }
    let params = params
        .with_endpoints(cfg.x_start[0], cfg.x_end[0])
        .with_mass(cfg.mass)
        .with_truncation(cfg.pap_n_truncation);
    Ok((family, params))
}

/// Histogram of sampled Wilson lines against the analytic density, plus a
/// KS test. Raw samples are mapped onto the family's variable first.
pub fn pap_hist(cfg: &RunConfig, dump_samples: bool) -> Result<(), CliError> {
    let start = Instant::now();
    let time = required_time(cfg, "pap-hist")?;
    let (family, params) = pap_setup(cfg, time)?;
    let density = PapDensity::new(family, params)?;
    let run = run_spec(cfg, time)?;
    let mut samples = sample_wilson_lines(&run, WilsonKind::Raw, cfg.workers)?;
    for v in &mut samples.values {
        *v = density.transform(*v);
    }
    let hist = histogram(&samples.values, cfg.pap_bins)?;
    let cdf = density.cdf_table(20_001);
    let report = ks_test(&samples.values, |v| cdf.eval(v), cfg.pap_alpha)?;

    let dir = output_dir(cfg.output_dir.as_deref())?;
    let mut manifest = RunManifest::new("pap-hist", Some(cfg));
    let path = dir.join("pap_overlay.csv");
    let mut out = create(&path)?;
    write_overlay_csv(&mut out, &hist, |v| density.density(v)).map_err(|e| CliError::io(&path, e))?;
    finish(out, &path)?;
    manifest.outputs.push(path);

    let json = report.to_json();
    let path = dir.join("pap_gof.json");
    write_text(&path, &format!("{json}\n"))?;
    manifest.outputs.push(path);

    if dump_samples {
        let path = dir.join("pap_samples.csv");
        let mut out = create(&path)?;
        samples.write_csv(&mut out).map_err(|e| CliError::io(&path, e))?;
        finish(out, &path)?;
        manifest.outputs.push(path);
    }
    println!("{json}");
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    manifest.write(&dir)?;
    Ok(())
}

pub fn fit_energy(
    cfg: Option<&RunConfig>,
    table: &Path,
    window: Option<(f64, f64)>,
    out_dir: Option<&Path>,
) -> Result<(), CliError> {
    let start = Instant::now();
    let file = File::open(table).map_err(|e| CliError::io(table, e))?;
    let records = read_sweep_csv(BufReader::new(file))?;
    let window = window.or(cfg.and_then(|c| c.fit_window)).unwrap_or_else(|| {
        let t = records.iter().map(|r| r.time);
        (t.clone().fold(f64::INFINITY, f64::min), t.fold(f64::NEG_INFINITY, f64::max))
    });
    let fit = fit_ground_state(&records, window)?;
    let json = fit.to_json();
    println!("{json}");

    let dir = output_dir(out_dir.or(cfg.and_then(|c| c.output_dir.as_deref())))?;
    let path = dir.join("energy_fit.json");
    write_text(&path, &format!("{json}\n"))?;
    let mut manifest = RunManifest::new("fit-energy", cfg);
    manifest.inputs.push(table.to_path_buf());
    manifest.outputs.push(path);
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    manifest.write(&dir)?;
    Ok(())
}
