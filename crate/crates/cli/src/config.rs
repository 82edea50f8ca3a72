//! `key = value` run configuration files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use wmc::numerics::linspace;
use wmc::pap::PapFamily;
use wmc::{BackgroundSpec, MethodSpec, PotentialSpec, SimConfig};

use crate::CliError;

const KEYS: &[&str] = &[
    "mass",
    "dimension",
    "x_start",
    "x_end",
    "time",
    "t_grid",
    "n_paths",
    "n_points",
    "seed",
    "potential",
    "potential.omega",
    "potential.k",
    "potential.alpha",
    "potential.lambda",
    "potential.g",
    "background",
    "background.omega",
    "background.center",
    "background.kappa",
    "method",
    "workers",
    "output_dir",
    "pap.family",
    "pap.bins",
    "pap.n_truncation",
    "pap.alpha",
    "fit.window",
];

/// Linearly spaced propagation times, written `start:stop:count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.count)
    }
}

/// Fully resolved configuration, with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mass: f64,
    pub dimension: usize,
    pub x_start: Vec<f64>,
    pub x_end: Vec<f64>,
    pub time: Option<f64>,
    pub t_grid: Option<TimeGrid>,
    pub n_paths: usize,
    pub n_points: usize,
    pub seed: u64,
    pub potential: PotentialSpec,
    pub background: BackgroundSpec,
    pub method: MethodSpec,
    pub workers: usize,
    pub output_dir: Option<PathBuf>,
    pub pap_family: Option<PapFamily>,
    pub pap_bins: usize,
    pub pap_n_truncation: usize,
    pub pap_alpha: f64,
    pub fit_window: Option<(f64, f64)>,
}

fn config_error(line: usize, message: impl std::fmt::Display) -> CliError {
    CliError::Config(if line == 0 {
        message.to_string()
    } else {
        format!("line {line}: {message}")
    })
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_error(n, format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(config_error(n, format!("unknown key `{key}`")));
            }
            if map.insert(key.to_string(), (n, value.trim().to_string())).is_some() {
                return Err(config_error(n, format!("duplicate key `{key}`")));
            }
        }
        Ok(Entries { map })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn number<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some((n, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| config_error(n, format!("`{key}` expects a number, got `{v}`"))),
        }
    }

    fn require<T: std::str::FromStr>(&mut self, key: &str, kind: &str) -> Result<T, CliError> {
        self.number(key)?
            .ok_or_else(|| config_error(0, format!("{kind} needs `{key}`")))
    }

    fn vector(&mut self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some((n, v)) => parse_vector(&v)
                .map(Some)
                .map_err(|_| config_error(n, format!("`{key}` expects comma-separated numbers, got `{v}`"))),
        }
    }

    /// Fails on any `prefix.*` key left over after the chosen kind took its own.
    fn reject_prefix(&self, prefix: &str, kind: &str) -> Result<(), CliError> {
        match self.map.iter().find(|(k, _)| k.starts_with(prefix)) {
            Some((k, (n, _))) => Err(config_error(*n, format!("`{k}` does not apply to {kind}"))),
            None => Ok(()),
        }
    }
}

fn parse_vector(text: &str) -> Result<Vec<f64>, std::num::ParseFloatError> {
    text.split(',').map(|s| s.trim().parse()).collect()
}

/// Parses `start:stop:count`.
pub fn parse_time_grid(text: &str) -> Result<TimeGrid, CliError> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let bad = || config_error(0, format!("t_grid expects `start:stop:count`, got `{text}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let grid = TimeGrid {
        start: parts[0].parse().map_err(|_| bad())?,
        stop: parts[1].parse().map_err(|_| bad())?,
        count: parts[2].parse().map_err(|_| bad())?,
    };
    if grid.count == 0 || (grid.count > 1 && !(grid.stop > grid.start)) {
        return Err(config_error(0, "t_grid needs count >= 1 and stop > start"));
    }
    Ok(grid)
}

/// Parses `low:high`.
pub fn parse_window(text: &str) -> Result<(f64, f64), CliError> {
    let bad = || config_error(0, format!("window expects `low:high`, got `{text}`"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let window = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if !(window.1 > window.0) {
        return Err(bad());
    }
    Ok(window)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut e = Entries::parse(text)?;
        let mass = e.number("mass")?.unwrap_or(1.0);
        let x_start = e.vector("x_start")?;
        let x_end = e.vector("x_end")?;
        let dimension = match e.number::<usize>("dimension")? {
            Some(d) => d,
            None => x_start.as_ref().or(x_end.as_ref()).map_or(1, Vec::len),
        };
        let x_start = x_start.unwrap_or_else(|| vec![0.0; dimension]);
        let x_end = x_end.unwrap_or_else(|| vec![0.0; dimension]);
        if x_start.len() != dimension || x_end.len() != dimension {
            return Err(config_error(0, format!("x_start and x_end need {dimension} components")));
        }
        let time = e.number("time")?;
        let t_grid = e.take("t_grid").map(|(n, v)| parse_time_grid(&v).map_err(|err| config_error(n, err))).transpose()?;
        let n_paths = e.number("n_paths")?.unwrap_or(1000);
        let n_points = e.number("n_points")?.unwrap_or(1000);
        let seed = e.number("seed")?.unwrap_or(0);

        let potential_kind = e.take("potential").map_or("free".to_string(), |(_, v)| v);
        let potential = match potential_kind.as_str() {
            "free" => PotentialSpec::Free,
            "harmonic" => PotentialSpec::Harmonic {
                omega: e.require("potential.omega", "harmonic potential")?,
            },
            "linear" => PotentialSpec::Linear {
                slope: e.require("potential.k", "linear potential")?,
            },
            "poschl_teller" => PotentialSpec::PoschlTeller {
                alpha: e.require("potential.alpha", "Poschl-Teller potential")?,
                lambda: e.number("potential.lambda")?.unwrap_or(1),
            },
            "absolute" => PotentialSpec::AbsoluteValue {
                strength: e.require("potential.g", "absolute value potential")?,
            },
            other => return Err(config_error(0, format!("unknown potential `{other}`"))),
        };
        e.reject_prefix("potential.", &format!("potential {potential_kind}"))?;

        let background_kind = e.take("background").map_or("none".to_string(), |(_, v)| v);
        let background = match background_kind.as_str() {
            "none" => BackgroundSpec::None,
            "harmonic" => {
                let frequency = e
                    .vector("background.omega")?
                    .ok_or_else(|| config_error(0, "harmonic background needs `background.omega`"))?;
                let center = e.vector("background.center")?.unwrap_or_else(|| vec![0.0; frequency.len()]);
                BackgroundSpec::Harmonic { frequency, center }
            }
            "linear" => BackgroundSpec::Linear {
                slope: e
                    .vector("background.kappa")?
                    .ok_or_else(|| config_error(0, "linear background needs `background.kappa`"))?,
            },
            other => return Err(config_error(0, format!("unknown background `{other}`"))),
        };
        e.reject_prefix("background.", &format!("background {background_kind}"))?;

        let method = match e.take("method").map(|(_, v)| v).as_deref() {
            None | Some("plain") => MethodSpec::Plain,
            Some("compensated") => MethodSpec::Compensated,
            Some("subtracted") => MethodSpec::Subtracted,
            Some(other) => return Err(config_error(0, format!("unknown method `{other}`"))),
        };
        let workers = e.number("workers")?.unwrap_or(0);
        let output_dir = e.take("output_dir").map(|(_, v)| PathBuf::from(v));
        let pap_family = match e.take("pap.family") {
            None => None,
            Some((n, v)) => Some(PapFamily::parse(&v).ok_or_else(|| config_error(n, format!("unknown PAP family `{v}`")))?),
        };
        let pap_bins = e.number("pap.bins")?.unwrap_or(100);
        let pap_n_truncation = e.number("pap.n_truncation")?.unwrap_or(wmc::pap::DEFAULT_TRUNCATION);
        let pap_alpha = e.number("pap.alpha")?.unwrap_or(0.01);
        let fit_window = e.take("fit.window").map(|(n, v)| parse_window(&v).map_err(|err| config_error(n, err))).transpose()?;
        debug_assert!(e.map.is_empty(), "every known key is consumed");

        Ok(RunConfig {
            mass,
            dimension,
            x_start,
            x_end,
            time,
            t_grid,
            n_paths,
            n_points,
            seed,
            potential,
            background,
            method,
            workers,
            output_dir,
            pap_family,
            pap_bins,
            pap_n_truncation,
            pap_alpha,
            fit_window,
        })
    }

    /// Core configuration at propagation time `time`.
    pub fn sim_config(&self, time: f64) -> SimConfig {
        SimConfig {
            mass: self.mass,
            dimension: self.dimension,
            x_start: self.x_start.clone(),
            x_end: self.x_end.clone(),
            time,
            n_paths: self.n_paths,
            n_points: self.n_points,
            seed: self.seed,
        }
    }

    /// Canonical config file text; parsing it gives back `self`.
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let mut line = |k: &str, v: String| writeln!(s, "{k} = {v}").expect("string write");
        line("mass", self.mass.to_string());
        line("dimension", self.dimension.to_string());
        line("x_start", join(&self.x_start));
        line("x_end", join(&self.x_end));
        if let Some(t) = self.time {
            line("time", t.to_string());
        }
        if let Some(g) = self.t_grid {
            line("t_grid", format!("{}:{}:{}", g.start, g.stop, g.count));
        }
        line("n_paths", self.n_paths.to_string());
        line("n_points", self.n_points.to_string());
        line("seed", self.seed.to_string());
        line("potential", self.potential.name().to_string());
        match self.potential {
            PotentialSpec::Free => {}
            PotentialSpec::Harmonic { omega } => line("potential.omega", omega.to_string()),
            PotentialSpec::Linear { slope } => line("potential.k", slope.to_string()),
            PotentialSpec::PoschlTeller { alpha, lambda } => {
                line("potential.alpha", alpha.to_string());
                line("potential.lambda", lambda.to_string());
            }
            PotentialSpec::AbsoluteValue { strength } => line("potential.g", strength.to_string()),
        }
        line("background", self.background.name().to_string());
        match &self.background {
            BackgroundSpec::None => {}
            BackgroundSpec::Harmonic { frequency, center } => {
                line("background.omega", join(frequency));
                line("background.center", join(center));
            }
            BackgroundSpec::Linear { slope } => line("background.kappa", join(slope)),
        }
        line("method", self.method.name().to_string());
        line("workers", self.workers.to_string());
        if let Some(dir) = &self.output_dir {
            line("output_dir", dir.display().to_string());
        }
        if let Some(f) = self.pap_family {
            line("pap.family", f.name().to_string());
        }
        line("pap.bins", self.pap_bins.to_string());
        line("pap.n_truncation", self.pap_n_truncation.to_string());
        line("pap.alpha", self.pap_alpha.to_string());
        if let Some((a, b)) = self.fit_window {
            line("fit.window", format!("{a}:{b}"));
        }
        s
    }
}
