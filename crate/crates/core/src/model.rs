//! Run configuration records and the bundle validator.
//!
//! Units are natural (hbar = 1). The mass is kept explicit everywhere so
//! that mass-dependence can be tested even though the reference results
//! all use `m = 1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ValidationErrors, ValidationIssue};

/// Full specification of one Monte Carlo kernel estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub mass: f64,
    pub dimension: usize,
    /// Initial point `x`.
    pub x_start: Vec<f64>,
    /// Final point `y`.
    pub x_end: Vec<f64>,
    /// Imaginary propagation time `T`.
    pub time: f64,
    /// Number of trajectories `N_L`.
    pub n_paths: usize,
    /// Number of time steps `N_P`; a path has `N_P + 1` nodes.
    pub n_points: usize,
    pub seed: u64,
}

impl SimConfig {
    /// One-dimensional unit-mass configuration propagating from the origin
    /// back to the origin.
    pub fn origin_1d(time: f64, n_paths: usize, n_points: usize, seed: u64) -> Self {
        SimConfig {
            mass: 1.0,
            dimension: 1,
            x_start: vec![0.0],
            x_end: vec![0.0],
            time,
            n_paths,
            n_points,
            seed,
        }
    }

    pub fn with_time(&self, time: f64) -> Self {
        SimConfig { time, ..self.clone() }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SimConfig { seed, ..self.clone() }
    }

    pub fn with_endpoints(&self, x_start: Vec<f64>, x_end: Vec<f64>) -> Self {
        SimConfig {
            dimension: x_start.len(),
            x_start,
            x_end,
            ..self.clone()
        }
    }

    pub fn with_mass(&self, mass: f64) -> Self {
        SimConfig { mass, ..self.clone() }
    }

    /// Time step `T / N_P`.
    pub fn step(&self) -> f64 {
        self.time / self.n_points as f64
    }

    /// Scale `sqrt(T/m)` between unit fluctuations and physical lengths.
    pub fn fluctuation_scale(&self) -> f64 {
        (self.time / self.mass).sqrt()
    }
}

/// Auxiliary potential used to reshape the trajectory ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackgroundSpec {
    None,
    /// `U = sum_j m Omega_j^2 (x_j - c_j)^2 / 2`.
    Harmonic { frequency: Vec<f64>, center: Vec<f64> },
    /// `U = sum_j kappa_j x_j`.
    Linear { slope: Vec<f64> },
}

impl BackgroundSpec {
    pub fn harmonic_1d(frequency: f64) -> Self {
        BackgroundSpec::Harmonic {
            frequency: vec![frequency],
            center: vec![0.0],
        }
    }

    pub fn linear_1d(slope: f64) -> Self {
        BackgroundSpec::Linear { slope: vec![slope] }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, BackgroundSpec::None)
    }

    pub fn name(&self) -> &'static str {
        match self {
            BackgroundSpec::None => "none",
            BackgroundSpec::Harmonic { .. } => "harmonic",
            BackgroundSpec::Linear { .. } => "linear",
        }
    }
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

impl fmt::Display for BackgroundSpec {
    /// Comma-free label, safe to embed in a CSV cell.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackgroundSpec::None => f.write_str("none"),
            BackgroundSpec::Harmonic { frequency, center } => write!(
                f,
                "harmonic:omega={};center={}",
                join(frequency),
                join(center)
            ),
            BackgroundSpec::Linear { slope } => write!(f, "linear:kappa={}", join(slope)),
        }
    }
}

/// Built-in physical potentials `V(x)`.
///
/// For `D > 1` the linear potential acts along the first axis and the
/// remaining kinds depend on the Euclidean norm `|x|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Free,
    /// `m omega^2 x^2 / 2`.
    Harmonic { omega: f64 },
    /// `k x`.
    Linear { slope: f64 },
    /// `-(alpha^2 / 2m) lambda (lambda + 1) / cosh^2(alpha x)`.
    PoschlTeller { alpha: f64, lambda: u32 },
    /// `g |x|`. The strength is often written as kappa in the literature;
    /// it is named `g` here to keep it apart from the linear background slope.
    AbsoluteValue { strength: f64 },
}

impl PotentialSpec {
    pub fn name(&self) -> &'static str {
        match self {
            PotentialSpec::Free => "free",
            PotentialSpec::Harmonic { .. } => "harmonic",
            PotentialSpec::Linear { .. } => "linear",
            PotentialSpec::PoschlTeller { .. } => "poschl_teller",
            PotentialSpec::AbsoluteValue { .. } => "absolute",
        }
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Free => f.write_str("free"),
            PotentialSpec::Harmonic { omega } => write!(f, "harmonic:omega={omega}"),
            PotentialSpec::Linear { slope } => write!(f, "linear:k={slope}"),
            PotentialSpec::PoschlTeller { alpha, lambda } => {
                write!(f, "poschl_teller:alpha={alpha};lambda={lambda}")
            }
            PotentialSpec::AbsoluteValue { strength } => write!(f, "absolute:g={strength}"),
        }
    }
}

/// How the background bias is removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    /// Free trajectories, no background.
    Plain,
    /// Background trajectories reweighted by a closed-form compensation factor.
    Compensated,
    /// Background trajectories with the background subtracted from the potential.
    Subtracted,
}

impl MethodSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MethodSpec::Plain => "plain",
            MethodSpec::Compensated => "compensated",
            MethodSpec::Subtracted => "subtracted",
        }
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A configuration bundle that passed [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub config: SimConfig,
    pub potential: PotentialSpec,
    pub background: BackgroundSpec,
    pub method: MethodSpec,
}

impl RunSpec {
    pub fn with_config(&self, config: SimConfig) -> Self {
        RunSpec {
            config,
            ..self.clone()
        }
    }
}

fn positive(value: f64) -> bool {
    value.is_finite() && value > 0.0
}

/// Checks every type invariant plus the method compatibility rule and
/// returns the bundle unchanged, or every violated rule.
pub fn validate(
    config: SimConfig,
    potential: PotentialSpec,
    background: BackgroundSpec,
    method: MethodSpec,
) -> Result<RunSpec, ValidationErrors> {
    let mut issues = Vec::new();
    let mut bad = |field: &'static str, reason: String| {
        issues.push(ValidationIssue::InvalidParameter { field, reason });
    };

    if !positive(config.mass) {
        bad("mass", format!("must be positive, got {}", config.mass));
    }
    if config.dimension < 1 {
        bad("dimension", "must be at least 1".into());
    }
    if !positive(config.time) {
        bad("time", format!("must be positive, got {}", config.time));
    }
    if config.n_paths < 1 {
        bad("n_paths", "must be at least 1".into());
    }
    if config.n_points < 2 {
        bad("n_points", format!("must be at least 2, got {}", config.n_points));
    }
    if config.x_start.len() != config.dimension {
        bad(
            "x_start",
            format!(
                "has {} components but dimension is {}",
                config.x_start.len(),
                config.dimension
            ),
        );
    } else if config.x_start.iter().any(|v| !v.is_finite()) {
        bad("x_start", "components must be finite".into());
    }
    if config.x_end.len() != config.dimension {
        bad(
            "x_end",
            format!(
                "has {} components but dimension is {}",
                config.x_end.len(),
                config.dimension
            ),
        );
    } else if config.x_end.iter().any(|v| !v.is_finite()) {
        bad("x_end", "components must be finite".into());
    }

    match potential {
        PotentialSpec::Free => {}
        PotentialSpec::Harmonic { omega } => {
            if !positive(omega) {
                bad("potential.omega", format!("must be positive, got {omega}"));
            }
        }
        PotentialSpec::Linear { slope } => {
            if !slope.is_finite() {
                bad("potential.slope", "must be finite".into());
            }
        }
        PotentialSpec::PoschlTeller { alpha, lambda } => {
            if !positive(alpha) {
                bad("potential.alpha", format!("must be positive, got {alpha}"));
            }
            if lambda < 1 {
                bad("potential.lambda", "must be a positive integer".into());
            }
        }
        PotentialSpec::AbsoluteValue { strength } => {
            if !positive(strength) {
                bad("potential.strength", format!("must be positive, got {strength}"));
            }
        }
    }

    match &background {
        BackgroundSpec::None => {}
        BackgroundSpec::Harmonic { frequency, center } => {
            if frequency.len() != config.dimension {
                bad(
                    "background.omega",
                    format!("needs one frequency per axis ({})", config.dimension),
                );
            } else if !frequency.iter().all(|&w| positive(w)) {
                bad("background.omega", "frequencies must be positive".into());
            }
            if center.len() != config.dimension {
                bad(
                    "background.center",
                    format!("needs one coordinate per axis ({})", config.dimension),
                );
            } else if center.iter().any(|c| !c.is_finite()) {
                bad("background.center", "components must be finite".into());
            }
        }
        BackgroundSpec::Linear { slope } => {
            if slope.len() != config.dimension {
                bad(
                    "background.slope",
                    format!("needs one slope per axis ({})", config.dimension),
                );
            } else if slope.iter().any(|k| !k.is_finite()) {
                bad("background.slope", "components must be finite".into());
            }
        }
    }

    let mut incompatible = |reason: &str| {
        issues.push(ValidationIssue::IncompatibleMethod {
            reason: reason.to_string(),
        })
    };
    match method {
        MethodSpec::Plain => {
            if !background.is_none() {
                incompatible("the plain estimator samples free trajectories; background must be none");
            }
        }
        MethodSpec::Subtracted => {
            if background.is_none() {
                incompatible("potential subtraction requires a harmonic or linear background");
            }
        }
        MethodSpec::Compensated => match (&potential, &background) {
            (PotentialSpec::Harmonic { .. }, BackgroundSpec::Harmonic { center, .. }) => {
                if config.dimension != 1 {
                    incompatible("compensation factors are one-dimensional");
                } else if center.iter().any(|&c| c != 0.0) {
                    incompatible("compensation needs the harmonic background centred on the potential minimum (0)");
                }
            }
            (PotentialSpec::Linear { slope }, BackgroundSpec::Linear { .. }) => {
                if config.dimension != 1 {
                    incompatible("compensation factors are one-dimensional");
                } else if *slope == 0.0 {
                    incompatible("compensation for a linear background needs a nonzero potential slope");
                }
            }
            _ => incompatible(
                "a closed-form compensation factor exists only for harmonic-on-harmonic or linear-on-linear",
            ),
        },
    }

    if issues.is_empty() {
        Ok(RunSpec {
            config,
            potential,
            background,
            method,
        })
    } else {
        Err(ValidationErrors(issues))
    }
}

impl RunSpec {
    /// Re-runs [`validate`] on the bundle's parts.
    pub fn revalidate(&self) -> Result<RunSpec, ValidationErrors> {
        validate(
            self.config.clone(),
            self.potential,
            self.background.clone(),
            self.method,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn figure_three() -> (SimConfig, PotentialSpec, BackgroundSpec, MethodSpec) {
        (
            SimConfig::origin_1d(40.0, 25_000, 5_000, 1),
            PotentialSpec::Harmonic { omega: 1.0 },
            BackgroundSpec::harmonic_1d(0.75),
            MethodSpec::Compensated,
        )
    }

    #[test]
    fn reference_compensated_run_is_valid() {
        let (c, p, b, m) = figure_three();
        let run = validate(c.clone(), p, b.clone(), m).unwrap();
        assert_eq!(run.config, c);
        assert_eq!(run.background, b);
    }

    #[test]
    fn zero_points_is_invalid() {
        let (mut c, p, b, m) = figure_three();
        c.n_points = 0;
        let err = validate(c, p, b, m).unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert!(matches!(
            err.0[0],
            ValidationIssue::InvalidParameter { field: "n_points", .. }
        ));
    }

    #[test]
    fn poschl_teller_cannot_be_compensated() {
        let c = SimConfig::origin_1d(10.0, 10, 10, 0);
        let err = validate(
            c,
            PotentialSpec::PoschlTeller { alpha: 1.0, lambda: 1 },
            BackgroundSpec::linear_1d(0.5),
            MethodSpec::Compensated,
        )
        .unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert!(matches!(err.0[0], ValidationIssue::IncompatibleMethod { .. }));
    }

    #[test]
    fn every_violation_is_reported() {
        let mut c = SimConfig::origin_1d(-1.0, 0, 1, 0);
        c.mass = 0.0;
        c.x_end = vec![0.0, 1.0];
        let err = validate(
            c,
            PotentialSpec::Harmonic { omega: -1.0 },
            BackgroundSpec::None,
            MethodSpec::Subtracted,
        )
        .unwrap_err();
        let fields: Vec<_> = err
            .0
            .iter()
            .map(|i| match i {
                ValidationIssue::InvalidParameter { field, .. } => *field,
                ValidationIssue::IncompatibleMethod { .. } => "method",
            })
            .collect();
        assert_eq!(
            fields,
            ["mass", "time", "n_paths", "n_points", "x_end", "potential.omega", "method"]
        );
    }

    #[test]
    fn plain_rejects_background_and_subtracted_requires_one() {
        let c = SimConfig::origin_1d(1.0, 10, 10, 0);
        let v = PotentialSpec::Harmonic { omega: 1.0 };
        assert!(validate(c.clone(), v, BackgroundSpec::harmonic_1d(1.0), MethodSpec::Plain).is_err());
        assert!(validate(c.clone(), v, BackgroundSpec::None, MethodSpec::Subtracted).is_err());
        assert!(validate(c, v, BackgroundSpec::harmonic_1d(1.0), MethodSpec::Subtracted).is_ok());
    }

    #[test]
    fn compensation_needs_centred_background() {
        let c = SimConfig::origin_1d(1.0, 10, 10, 0);
        let bg = BackgroundSpec::Harmonic {
            frequency: vec![0.75],
            center: vec![0.5],
        };
        let err = validate(c, PotentialSpec::Harmonic { omega: 1.0 }, bg, MethodSpec::Compensated)
            .unwrap_err();
        assert!(matches!(err.0[0], ValidationIssue::IncompatibleMethod { .. }));
    }

    #[test]
    fn validation_is_idempotent() {
        let (c, p, b, m) = figure_three();
        let once = validate(c, p, b, m).unwrap();
        let twice = once.revalidate().unwrap();
        assert_eq!(once, twice);
        assert_eq!(
            serde_json::to_string(&once).unwrap(),
            serde_json::to_string(&twice).unwrap()
        );
    }

    #[test]
    fn labels_are_csv_safe() {
        let bg = BackgroundSpec::Harmonic {
            frequency: vec![0.75, 1.0],
            center: vec![0.0, 0.0],
        };
        assert!(!bg.to_string().contains(','));
        let v = PotentialSpec::PoschlTeller { alpha: 1.0, lambda: 1 };
        assert!(!v.to_string().contains(','));
    }
}
