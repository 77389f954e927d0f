//! Low-rank (sum-unary, average-unary and subset) perturbations.
//!
//! A [`Perturber`] prepares a solver for one perturbation kind and draws
//! perturbed MAP values from it. Bounds, clamping checks, the sequential
//! sampler and the error diagnostics are built on top.

mod bounds;
mod clamping;
mod diagnostics;
mod sequential;

pub use bounds::{
    bound_from_samples, bound_mse_sweep, bound_sweep, derivative_at_zero, derivative_comparison,
    lower_bound_avg, lower_bound_subset, upper_bound, upper_bound_sweep, BoundKind, BoundMseRow,
    BoundReport, DerivativeComparison,
};
pub use clamping::{clamped_upper_bound, clamping_check, ClampingReport};
pub use diagnostics::{diagnostics, DiagnosticsReport, MIN_DIAGNOSTIC_SAMPLES};
pub use sequential::{sequential_sample, sequential_samples, SamplerTrace, StepProbabilities};

use crate::error::{Error, Result};
use crate::exact::DEFAULT_ENUMERATION_CAP;
use crate::model::{Configuration, GraphicalModel};
use crate::rng;
use crate::solver::{MapSolver, SolverChoice, UnaryOffsets};
use crate::tricks::sample_gumbel;
use rand::Rng;
use rayon::prelude::*;

/// Which low-rank perturbation produced a sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PerturbationKind {
    /// `U`: one Gumbel per variable state, summed.
    SumUnary,
    /// `U_j`: variables `0..prefix.len()` clamped, the rest sum-unary perturbed.
    Partial { prefix: Vec<usize> },
    /// `L`: sum-unary noise scaled by `1/n`.
    AvgUnary,
    /// One Gumbel per joint setting of the listed variables.
    Subset { variables: Vec<usize> },
}

/// One perturbed MAP draw.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSample {
    pub value: f64,
    pub kind: PerturbationKind,
    pub solver_exact: bool,
    /// Maximizer in the original model's variables.
    pub config: Configuration,
    /// Unscaled noise at the maximizer, `Σ_i γ_i(x_i)` over perturbed variables.
    pub noise_at_config: f64,
}

/// A solver prepared for repeated draws of one perturbation kind.
pub struct Perturber {
    kind: PerturbationKind,
    solver: Box<dyn MapSolver>,
    cardinalities: Vec<usize>,
    scale: f64,
    constant: f64,
    noisy_len: usize,
    // decoding back to the original model's variables
    original_cards: Vec<usize>,
    subset_members: Vec<usize>,
}

impl std::fmt::Debug for Perturber {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Perturber")
            .field("kind", &self.kind)
            .field("exact", &self.solver.is_exact())
            .finish()
    }
}

impl Perturber {
    pub fn new(model: &GraphicalModel, kind: PerturbationKind, solver: SolverChoice) -> Result<Self> {
        let n = model.variable_count();
        let mut constant = 0.0;
        let mut scale = 1.0;
        let mut subset_members = Vec::new();
        let target = match &kind {
            PerturbationKind::SumUnary => model.clone(),
            PerturbationKind::AvgUnary => {
                if n == 0 {
                    return Err(Error::InvalidArgument(
                        "average-unary perturbation needs at least one variable".into(),
                    ));
                }
                scale = 1.0 / n as f64;
                model.clone()
            }
            PerturbationKind::Partial { prefix } => {
                let clamped = model.clamp(prefix)?;
                constant = clamped.constant;
                clamped.model
            }
            PerturbationKind::Subset { variables } => {
                let merged = model.merge_variables(variables, DEFAULT_ENUMERATION_CAP)?;
                subset_members = variables.clone();
                subset_members.sort_unstable();
                merged
            }
        };
        let cardinalities = target.cardinalities().to_vec();
        let noisy_len = match kind {
            PerturbationKind::Subset { .. } => cardinalities[0],
            _ => cardinalities.iter().sum(),
        };
        Ok(Perturber {
            kind,
            solver: solver.prepare(&target)?,
            cardinalities,
            scale,
            constant,
            noisy_len,
            original_cards: model.cardinalities().to_vec(),
            subset_members,
        })
    }

    pub fn kind(&self) -> &PerturbationKind {
        &self.kind
    }

    pub fn is_exact(&self) -> bool {
        self.solver.is_exact()
    }

    /// True when no noise enters, so every draw returns the same value.
    pub fn is_deterministic(&self) -> bool {
        self.noisy_len == 0
    }

    /// A zeroed offset buffer sized for this perturber.
    pub fn offsets(&self) -> UnaryOffsets {
        UnaryOffsets::zeros(&self.cardinalities, self.scale).expect("scale is positive")
    }

    fn fill<R: Rng + ?Sized>(&self, rng: &mut R, offsets: &mut UnaryOffsets) -> u64 {
        for v in &mut offsets.values_mut()[..self.noisy_len] {
            *v = sample_gumbel(rng);
        }
        if self.solver.is_exact() {
            0
        } else {
            rng.next_u64()
        }
    }

    /// The perturbed MAP value only, reusing `offsets` as scratch.
    #[inline]
    pub fn draw_value<R: Rng + ?Sized>(&self, rng: &mut R, offsets: &mut UnaryOffsets) -> f64 {
        let solver_seed = self.fill(rng, offsets);
        self.solver.solve_value(offsets, solver_seed) + self.constant
    }

    /// A full sample with maximizer and noise at the maximizer.
    pub fn draw_with<R: Rng + ?Sized>(&self, rng: &mut R) -> PerturbationSample {
        let mut offsets = self.offsets();
        let solver_seed = self.fill(rng, &mut offsets);
        let r = self.solver.solve(&offsets, solver_seed);
        PerturbationSample {
            value: r.value + self.constant,
            kind: self.kind.clone(),
            solver_exact: r.exact,
            noise_at_config: offsets.total(r.config.as_slice()),
            config: self.decode(&r.config),
        }
    }

    /// Draw on stream `(seed, path)`.
    pub fn draw_at(&self, seed: u64, path: &[u64]) -> PerturbationSample {
        self.draw_with(&mut rng::stream(seed, path))
    }

    /// `count` values, draw `m` on stream `(seed, path..., m)`.
    pub fn values(&self, count: usize, seed: u64, path: &[u64]) -> Vec<f64> {
        (0..count)
            .into_par_iter()
            .map_init(
                || (self.offsets(), path.to_vec()),
                |(offsets, p), m| {
                    p.truncate(path.len());
                    p.push(m as u64);
                    self.draw_value(&mut rng::stream(seed, p), offsets)
                },
            )
            .collect()
    }

    fn decode(&self, x: &Configuration) -> Configuration {
        match &self.kind {
            PerturbationKind::SumUnary | PerturbationKind::AvgUnary => x.clone(),
            PerturbationKind::Partial { prefix } => {
                let mut full = prefix.clone();
                full.extend_from_slice(x.as_slice());
                Configuration(full)
            }
            PerturbationKind::Subset { .. } => {
                let n = self.original_cards.len();
                let mut full = vec![0; n];
                let mut joint = x[0];
                for &v in self.subset_members.iter().rev() {
                    full[v] = joint % self.original_cards[v];
                    joint /= self.original_cards[v];
                }
                let mut rest = x.as_slice()[1..].iter();
                for (v, slot) in full.iter_mut().enumerate() {
                    if self.subset_members.binary_search(&v).is_err() {
                        *slot = *rest.next().expect("one state per remaining variable");
                    }
                }
                Configuration(full)
            }
        }
    }
}

fn draw_once<R: Rng + ?Sized>(
    model: &GraphicalModel,
    kind: PerturbationKind,
    solver: SolverChoice,
    rng: &mut R,
) -> Result<PerturbationSample> {
    Ok(Perturber::new(model, kind, solver)?.draw_with(rng))
}

/// One draw of the sum-unary perturbation MAP value `U`.
pub fn sample_u<R: Rng + ?Sized>(
    model: &GraphicalModel,
    solver: SolverChoice,
    rng: &mut R,
) -> Result<PerturbationSample> {
    draw_once(model, PerturbationKind::SumUnary, solver, rng)
}

/// One draw of `U_j` with the leading `prefix` clamped.
pub fn sample_partial_u<R: Rng + ?Sized>(
    model: &GraphicalModel,
    prefix: &[usize],
    solver: SolverChoice,
    rng: &mut R,
) -> Result<PerturbationSample> {
    draw_once(
        model,
        PerturbationKind::Partial {
            prefix: prefix.to_vec(),
        },
        solver,
        rng,
    )
}

/// One draw of the average-unary perturbation MAP value `L`.
pub fn sample_l<R: Rng + ?Sized>(
    model: &GraphicalModel,
    solver: SolverChoice,
    rng: &mut R,
) -> Result<PerturbationSample> {
    draw_once(model, PerturbationKind::AvgUnary, solver, rng)
}

/// One draw with a Gumbel per joint setting of `variables`.
pub fn sample_subset<R: Rng + ?Sized>(
    model: &GraphicalModel,
    variables: &[usize],
    solver: SolverChoice,
    rng: &mut R,
) -> Result<PerturbationSample> {
    draw_once(
        model,
        PerturbationKind::Subset {
            variables: variables.to_vec(),
        },
        solver,
        rng,
    )
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > -1.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha must lie in (-1, inf), got {alpha}")))
    }
}
