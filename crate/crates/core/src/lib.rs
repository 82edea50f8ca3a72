//! Worldline Monte Carlo estimation of imaginary-time propagators.
//!
//! Trajectories are generated directly (no Markov chain) either as free
//! Brownian bridges or inside a harmonic or linear background potential.
//! The bias of the background is removed by a closed-form compensation
//! factor or by subtracting the background from the potential.

pub mod analysis;
pub mod error;
pub mod estimator;
pub mod kernels;
pub mod model;
pub mod numerics;
pub mod pap;
pub mod pathgen;
pub mod potentials;
pub mod randomness;
pub mod special;
pub mod wilson;

pub use error::{Error, Result, ValidationErrors, ValidationIssue};
pub use estimator::{
    estimate, estimate_compensated, estimate_plain, estimate_subtracted, sweep, EstimatorOptions,
    KernelEstimate, SweepRow, SweepTable,
};
pub use model::{validate, BackgroundSpec, MethodSpec, PotentialSpec, RunSpec, SimConfig};
pub use pap::{PapCurve, PapFamily, PapParams, PapSystem};
pub use pathgen::{PathGenerator, PhysicalPath, UnitPath};
pub use randomness::StreamKey;
pub use wilson::{WilsonKind, WilsonSampleSet};
