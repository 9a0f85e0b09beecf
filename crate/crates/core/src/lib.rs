//! Sampling random vertex-colored multigraphs with a prescribed Colored
//! Degree Matrix (the CCM null model) via Metropolis–Hastings double-edge
//! swap chains, with diagnostics, a brute-force verification oracle, and a
//! polarization-significance harness.

pub mod diagnostics;
pub mod error;
pub mod graph;
pub mod io;
pub mod oracle;
pub mod polarization;
pub mod sampler;
pub mod swap;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{ColoredDegreeMatrix, ColoredMultigraph, JointColorMatrix, OccIdx};
pub use sampler::{
    default_iterations, run, run_ensemble, sample_ensemble, Algorithm, ChainConfig, Laziness,
    OutcomeTallies, RunResult, TargetWeight, TraceSpec, UniformTarget,
};
pub use swap::{SwapKind, SwapProposal};
