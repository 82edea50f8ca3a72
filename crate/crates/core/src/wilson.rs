//! Wilson-line variables `v = int V dtau` along discretised trajectories.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BackgroundSpec, PotentialSpec, RunSpec, SimConfig};
use crate::numerics::CompensatedSum;
use crate::pathgen::{Embedding, PathGenerator, PhysicalPath};
use crate::potentials::{evaluate, evaluate_background};
use crate::randomness::StreamKey;

/// `v = (T/N) sum_{k=1}^{N} V(x_k)`; the start node is excluded.
pub fn wilson_line(path: &PhysicalPath, potential: &PotentialSpec, config: &SimConfig) -> f64 {
    let mut acc = CompensatedSum::new();
    for k in 1..=path.n_points() {
        acc.add(evaluate(potential, path.point(k), config.mass));
    }
    config.time / path.n_points() as f64 * acc.value()
}

/// `nu = (T/N) sum_{k=1}^{N} [V(x_k) - U(x_k)]`.
pub fn wilson_line_subtracted(
    path: &PhysicalPath,
    potential: &PotentialSpec,
    background: &BackgroundSpec,
    config: &SimConfig,
) -> Result<f64> {
    if background.is_none() {
        return Err(Error::SubtractionWithoutBackground);
    }
    let mut acc = CompensatedSum::new();
    for k in 1..=path.n_points() {
        let x = path.point(k);
        acc.add(evaluate(potential, x, config.mass) - evaluate_background(background, x, config.mass));
    }
    Ok(config.time / path.n_points() as f64 * acc.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilsonKind {
    /// `v` of the physical potential.
    Raw,
    /// `nu`, the physical potential minus the background.
    Subtracted,
}

/// One Wilson-line value per trajectory, in trajectory order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilsonSampleSet {
    pub values: Vec<f64>,
    pub kind: WilsonKind,
    pub run: RunSpec,
}

impl WilsonSampleSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Writes `trajectory_id,value` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "trajectory_id,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{i},{v:.16e}")?;
        }
        Ok(())
    }
}

/// Evaluates `f(index, scratch)` for every trajectory index and returns the
/// results in index order. `workers = 0` uses every available core.
pub(crate) fn map_trajectories<T, S, I, F>(n: usize, workers: usize, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(usize, &mut S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if workers != 1 {
            let run = || (0..n).into_par_iter().map_init(&init, |s, i| f(i, s)).collect();
            return match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                Ok(pool) => pool.install(run),
                Err(_) => run(),
            };
        }
    }
    let _ = workers;
    let mut scratch = init();
    (0..n).map(|i| f(i, &mut scratch)).collect()
}

/// Draws `N_L` trajectories for `run` and records their Wilson lines.
///
/// Trajectory `i` uses the stream `(seed, i, axis)`, so the values do not
/// depend on the worker count.
pub fn sample_wilson_lines(run: &RunSpec, kind: WilsonKind, workers: usize) -> Result<WilsonSampleSet> {
    if kind == WilsonKind::Subtracted && run.background.is_none() {
        return Err(Error::SubtractionWithoutBackground);
    }
    let config = &run.config;
    let generator = PathGenerator::new(config, &run.background);
    let embedding = Embedding::for_background(config, &run.background);
    let values = map_trajectories(
        config.n_paths,
        workers,
        || {
            (
                generator.blank(),
                PhysicalPath::zeros(config.dimension, config.n_points),
            )
        },
        |i, (q, x)| {
            generator.generate_into(StreamKey::new(config.seed, i as u64, 0), q);
            embedding.embed_into(q, x);
            match kind {
                WilsonKind::Raw => wilson_line(x, &run.potential, config),
                WilsonKind::Subtracted => {
                    // background checked above
                    wilson_line_subtracted(x, &run.potential, &run.background, config)
                        .unwrap_or(f64::NAN)
                }
            }
        },
    );
    Ok(WilsonSampleSet {
        values,
        kind,
        run: run.clone(),
    })
}

/// The physical trajectories of `run`, for inspection and export.
pub fn sample_paths(run: &RunSpec, count: usize) -> Vec<PhysicalPath> {
    let config = &run.config;
    let generator = PathGenerator::new(config, &run.background);
    let embedding = Embedding::for_background(config, &run.background);
    (0..count)
        .map(|i| embedding.embed(&generator.generate(StreamKey::new(config.seed, i as u64, 0))))
        .collect()
}
