//! Perturbed MAP solvers: `max_x φ(x) + scale · Σ_i δ_i(x_i)`.
//!
//! Every perturbation used by the toolkit reduces to per-variable offset
//! tables. Full-rank and subset perturbations are expressed by first merging
//! the perturbed variables into a single joint variable.

use crate::error::{Error, Result};
use crate::exact::DEFAULT_ENUMERATION_CAP;
use crate::model::{Configuration, GraphicalModel};
use crate::rng;
use rand::Rng;
use std::cell::RefCell;

/// Per-variable offset tables δ_i and a positive multiplier applied to their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct UnaryOffsets {
    starts: Vec<usize>,
    values: Vec<f64>,
    scale: f64,
}

impl UnaryOffsets {
    pub fn zeros(cardinalities: &[usize], scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("offset scale must be positive, got {scale}")));
        }
        let mut starts = Vec::with_capacity(cardinalities.len() + 1);
        let mut total = 0;
        for &c in cardinalities {
            starts.push(total);
            total += c;
        }
        starts.push(total);
        Ok(UnaryOffsets {
            starts,
            values: vec![0.0; total],
            scale,
        })
    }

    pub fn from_tables(tables: &[Vec<f64>], scale: f64) -> Result<Self> {
        let cards: Vec<usize> = tables.iter().map(Vec::len).collect();
        let mut out = Self::zeros(&cards, scale)?;
        for (i, t) in tables.iter().enumerate() {
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("offsets must be finite".into()));
            }
            out.table_mut(i).copy_from_slice(t);
        }
        Ok(out)
    }

    pub fn variable_count(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    #[inline]
    pub fn table(&self, i: usize) -> &[f64] {
        &self.values[self.starts[i]..self.starts[i + 1]]
    }

    #[inline]
    pub fn table_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[self.starts[i]..self.starts[i + 1]]
    }

    /// All offsets, variable-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// All offsets, variable-major, mutably.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Unscaled `Σ_i δ_i(x_i)`.
    pub fn total(&self, x: &[usize]) -> f64 {
        x.iter().enumerate().map(|(i, &s)| self.table(i)[s]).sum()
    }

    pub fn check(&self, model: &GraphicalModel) -> Result<()> {
        let n = model.variable_count();
        if self.variable_count() != n
            || (0..n).any(|i| self.table(i).len() != model.cardinalities()[i])
        {
            return Err(Error::InvalidArgument(
                "offset tables do not match model cardinalities".into(),
            ));
        }
        Ok(())
    }
}

/// Maximizer of a perturbed potential.
#[derive(Debug, Clone, PartialEq)]
pub struct MapResult {
    pub config: Configuration,
    /// `φ(config) + scale · Σ_i δ_i(config_i)`
    pub value: f64,
    pub exact: bool,
}

/// A solver bound to one model.
pub trait MapSolver: Send + Sync {
    /// `seed` drives any internal randomness; exact solvers ignore it.
    fn solve(&self, offsets: &UnaryOffsets, seed: u64) -> MapResult;

    fn solve_value(&self, offsets: &UnaryOffsets, seed: u64) -> f64 {
        self.solve(offsets, seed).value
    }

    fn is_exact(&self) -> bool;
}

/// Which solver to build for a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Exhaustive,
    Icm { restarts: usize },
}

impl SolverChoice {
    pub fn prepare(&self, model: &GraphicalModel) -> Result<Box<dyn MapSolver>> {
        Ok(match *self {
            SolverChoice::Exhaustive => Box::new(Exhaustive::new(model, DEFAULT_ENUMERATION_CAP)?),
            SolverChoice::Icm { restarts } => Box::new(Icm::new(model, restarts)?),
        })
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, SolverChoice::Exhaustive)
    }
}

impl std::fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolverChoice::Exhaustive => f.write_str("exhaustive"),
            SolverChoice::Icm { restarts } => write!(f, "icm:{restarts}"),
        }
    }
}

thread_local! {
    static SCRATCH: RefCell<(Vec<f64>, Vec<f64>)> = const { RefCell::new((Vec::new(), Vec::new())) };
}

/// Exact solver over the enumerated configuration space.
///
/// The space is split into a leading and a trailing block of variables so
/// that each candidate costs two additions:
/// `φ[h·L + l] + B[l] + A[h]`, with `A`, `B` the summed offsets of each block.
#[derive(Debug, Clone)]
pub struct Exhaustive {
    cardinalities: Vec<usize>,
    table: Vec<f64>,
    split: usize,
    low_size: usize,
    // for small spaces: flat offset positions of every configuration
    lookup: Option<Vec<u32>>,
}

/// Largest `|𝒳| · n` served by the direct lookup path.
const LOOKUP_LIMIT: usize = 1 << 16;

impl Exhaustive {
    pub fn new(model: &GraphicalModel, cap: usize) -> Result<Self> {
        let table = model.potential_table(cap)?;
        let cards = model.cardinalities().to_vec();
        let target = (table.len() as f64).sqrt();
        let mut split = 0;
        let mut high = 1usize;
        while split < cards.len() && ((high * cards[split]) as f64) <= target {
            high *= cards[split];
            split += 1;
        }
        let low_size = table.len() / high;
        let n = cards.len();
        let lookup = (n > 0 && table.len() * n <= LOOKUP_LIMIT).then(|| {
            let mut starts = Vec::with_capacity(n);
            let mut acc = 0u32;
            for &c in &cards {
                starts.push(acc);
                acc += c as u32;
            }
            let mut out = Vec::with_capacity(table.len() * n);
            let mut x = vec![0usize; n];
            for _ in 0..table.len() {
                out.extend(x.iter().zip(&starts).map(|(&s, &b)| b + s as u32));
                for i in (0..n).rev() {
                    x[i] += 1;
                    if x[i] < cards[i] {
                        break;
                    }
                    x[i] = 0;
                }
            }
            out
        });
        Ok(Exhaustive {
            cardinalities: cards,
            table,
            split,
            low_size,
            lookup,
        })
    }

    fn block_sums(out: &mut Vec<f64>, offsets: &UnaryOffsets, vars: std::ops::Range<usize>) {
        let scale = offsets.scale();
        out.clear();
        out.push(0.0);
        for i in vars {
            let t = offsets.table(i);
            let c = t.len();
            let len = out.len();
            out.resize(len * c, 0.0);
            for j in (0..len).rev() {
                let base = out[j];
                for (s, &d) in t.iter().enumerate() {
                    out[j * c + s] = base + scale * d;
                }
            }
        }
    }

    fn best(&self, offsets: &UnaryOffsets) -> (usize, f64) {
        debug_assert_eq!(offsets.variable_count(), self.cardinalities.len());
        if let Some(lookup) = &self.lookup {
            let values = offsets.values();
            let scale = offsets.scale();
            let n = self.cardinalities.len();
            let mut best = (0, f64::NEG_INFINITY);
            for (i, (&phi, pos)) in self.table.iter().zip(lookup.chunks_exact(n)).enumerate() {
                let noise: f64 = pos.iter().map(|&p| values[p as usize]).sum();
                let v = phi + scale * noise;
                if v > best.1 {
                    best = (i, v);
                }
            }
            return best;
        }
        SCRATCH.with(|cell| {
            let (high, low) = &mut *cell.borrow_mut();
            Self::block_sums(high, offsets, 0..self.split);
            Self::block_sums(low, offsets, self.split..self.cardinalities.len());
            let mut best = (0, f64::NEG_INFINITY);
            for (h, row) in self.table.chunks_exact(self.low_size).enumerate() {
                let row_max = row
                    .iter()
                    .zip(low.iter())
                    .map(|(p, d)| p + d)
                    .fold(f64::NEG_INFINITY, f64::max);
                let v = row_max + high[h];
                if v > best.1 {
                    let l = row
                        .iter()
                        .zip(low.iter())
                        .position(|(p, d)| p + d == row_max)
                        .unwrap_or(0);
                    best = (h * self.low_size + l, v);
                }
            }
            best
        })
    }

    fn configuration_at(&self, mut index: usize) -> Configuration {
        let mut x = vec![0; self.cardinalities.len()];
        for i in (0..x.len()).rev() {
            x[i] = index % self.cardinalities[i];
            index /= self.cardinalities[i];
        }
        Configuration(x)
    }
}

impl MapSolver for Exhaustive {
    fn solve(&self, offsets: &UnaryOffsets, _seed: u64) -> MapResult {
        let (index, value) = self.best(offsets);
        MapResult {
            config: self.configuration_at(index),
            value,
            exact: true,
        }
    }

    fn solve_value(&self, offsets: &UnaryOffsets, _seed: u64) -> f64 {
        self.best(offsets).1
    }

    fn is_exact(&self) -> bool {
        true
    }
}

/// Iterated conditional modes with random restarts.
///
/// Each restart draws a uniform initial configuration, then sweeps variables
/// in ascending order setting each to its best state given the others
/// (ties keep the current state, then the lowest state) until a full sweep
/// changes nothing. The best configuration over all restarts is returned.
#[derive(Debug, Clone)]
pub struct Icm {
    model: GraphicalModel,
    restarts: usize,
    touching: Vec<Vec<usize>>,
}

const ICM_MAX_SWEEPS: usize = 10_000;

impl Icm {
    pub fn new(model: &GraphicalModel, restarts: usize) -> Result<Self> {
        if restarts == 0 {
            return Err(Error::InvalidArgument("ICM needs at least one restart".into()));
        }
        let mut touching = vec![Vec::new(); model.variable_count()];
        for (fi, f) in model.factors().iter().enumerate() {
            for &v in f.scope() {
                touching[v].push(fi);
            }
        }
        Ok(Icm {
            model: model.clone(),
            restarts,
            touching,
        })
    }

    fn local_score(&self, x: &mut [usize], i: usize, s: usize, offsets: &UnaryOffsets) -> f64 {
        x[i] = s;
        let cards = self.model.cardinalities();
        let factors = self.model.factors();
        let mut v = offsets.scale() * offsets.table(i)[s];
        for &fi in &self.touching[i] {
            v += factors[fi].value(x, cards);
        }
        v
    }
}

impl MapSolver for Icm {
    fn solve(&self, offsets: &UnaryOffsets, seed: u64) -> MapResult {
        let n = self.model.variable_count();
        let cards = self.model.cardinalities();
        let mut rng = rng::stream(seed, &[]);
        let mut best: Option<(Vec<usize>, f64)> = None;
        for _ in 0..self.restarts {
            let mut x: Vec<usize> = cards.iter().map(|&c| rng.random_range(0..c)).collect();
            for _ in 0..ICM_MAX_SWEEPS {
                let mut changed = false;
                for i in 0..n {
                    let current = x[i];
                    let mut best_state = current;
                    let mut best_score = self.local_score(&mut x, i, current, offsets);
                    for s in 0..cards[i] {
                        if s == current {
                            continue;
                        }
                        let score = self.local_score(&mut x, i, s, offsets);
                        if score > best_score {
                            best_score = score;
                            best_state = s;
                        }
                    }
                    x[i] = best_state;
                    changed |= best_state != current;
                }
                if !changed {
                    break;
                }
            }
            let value = self.model.potential(&x) + offsets.scale() * offsets.total(&x);
            if best.as_ref().is_none_or(|(_, b)| value > *b) {
                best = Some((x, value));
            }
        }
        let (x, value) = best.expect("at least one restart");
        MapResult {
            config: Configuration(x),
            value,
            exact: false,
        }
    }

    fn is_exact(&self) -> bool {
        false
    }
}

/// Exact maximization by enumeration.
pub fn solve_exhaustive(model: &GraphicalModel, offsets: &UnaryOffsets) -> Result<MapResult> {
    offsets.check(model)?;
    Ok(Exhaustive::new(model, DEFAULT_ENUMERATION_CAP)?.solve(offsets, 0))
}

/// Approximate maximization by ICM with `restarts` random initializations.
pub fn solve_icm(
    model: &GraphicalModel,
    offsets: &UnaryOffsets,
    restarts: usize,
    seed: u64,
) -> Result<MapResult> {
    offsets.check(model)?;
    Ok(Icm::new(model, restarts)?.solve(offsets, seed))
}
