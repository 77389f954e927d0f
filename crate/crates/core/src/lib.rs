//! Perturb-and-MAP estimation of partition functions and Gibbs sampling for
//! discrete graphical models.
//!
//! The crate covers the full-rank trick family built on competing exponential
//! clocks (Gumbel, Exponential, Weibull, Fréchet, Pareto, Tail), low-rank
//! sum-unary and average-unary perturbation bounds on `ln Z`, the sequential
//! Gibbs sampler derived from them, and brute-force oracles to check all of it
//! on small models.

pub mod error;
pub mod exact;
pub mod low_rank;
pub mod math;
pub mod model;
pub mod rng;
pub mod solver;
pub mod tricks;

pub use error::{Error, Result};
pub use exact::{entropy, kl_divergence, summarize, ExactSummary, DEFAULT_ENUMERATION_CAP};
pub use math::EULER_GAMMA;
pub use model::{
    load_uai, save_uai, spin_glass_grid, ClampedModel, Configuration, Coupling, Factor,
    GraphicalModel,
};
pub use solver::{MapResult, MapSolver, SolverChoice, UnaryOffsets};
pub use tricks::{EstimateReport, Target, Trick};
pub use low_rank::{BoundKind, BoundReport, DiagnosticsReport, PerturbationSample, SamplerTrace};
pub use tricks::AnalyticStats;
