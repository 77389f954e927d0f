//! Brute-force ground truth for small models.

use crate::error::{Error, Result};
use crate::math::LogSumExp;
use crate::model::{Configuration, GraphicalModel};
use rayon::prelude::*;

/// Largest configuration space enumerated by default (2²²).
pub const DEFAULT_ENUMERATION_CAP: usize = 1 << 22;

/// Chunk size for the parallel log-sum-exp; fixed so the reduction order
/// never depends on the worker count.
const CHUNK: usize = 1 << 14;

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Exact partition function, Gibbs table and MAP of an enumerable model.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSummary {
    pub log_partition: f64,
    /// p(x) for every configuration in lexicographic order.
    pub gibbs: Vec<f64>,
    pub map_config: Configuration,
    pub map_value: f64,
}

impl ExactSummary {
    pub fn partition(&self) -> f64 {
        self.log_partition.exp()
    }
}

pub fn summarize(model: &GraphicalModel) -> Result<ExactSummary> {
    summarize_with_cap(model, DEFAULT_ENUMERATION_CAP)
}

pub fn summarize_with_cap(model: &GraphicalModel, cap: usize) -> Result<ExactSummary> {
    let table = model.potential_table(cap)?;
    let log_partition = table
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = LogSumExp::new();
            chunk.iter().for_each(|&v| acc.push(v));
            acc
        })
        .collect::<Vec<_>>()
        .iter()
        .fold(LogSumExp::new(), |mut a, b| {
            a.merge(b);
            a
        })
        .value();
    if log_partition == f64::NEG_INFINITY {
        return Err(Error::ZeroPartition);
    }
    // first maximum in index order is the lexicographically smallest argmax
    let (map_index, map_value) = table
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        });
    let gibbs = table
        .par_iter()
        .map(|&v| (v - log_partition).exp())
        .collect();
    Ok(ExactSummary {
        log_partition,
        gibbs,
        map_config: model.configuration_at(map_index),
        map_value,
    })
}

fn check_normalized(dist: &[f64]) -> Result<()> {
    if dist.iter().any(|&q| !(q >= 0.0) || !q.is_finite()) {
        return Err(Error::Domain("probabilities must be finite and non-negative".into()));
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized { sum });
    }
    Ok(())
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy(dist: &[f64]) -> Result<f64> {
    check_normalized(dist)?;
    Ok(-dist
        .iter()
        .filter(|&&q| q > 0.0)
        .map(|&q| q * q.ln())
        .sum::<f64>())
}

/// KL(q ‖ p) in nats. Errors when `q` puts mass where `p` has none.
pub fn kl_divergence(q: &[f64], p: &[f64]) -> Result<f64> {
    if q.len() != p.len() {
        return Err(Error::InvalidArgument(format!(
            "support sizes differ ({} vs {})",
            q.len(),
            p.len()
        )));
    }
    check_normalized(q)?;
    check_normalized(p)?;
    let mut kl = 0.0;
    for (i, (&qi, &pi)) in q.iter().zip(p).enumerate() {
        if qi == 0.0 {
            continue;
        }
        if pi == 0.0 {
            return Err(Error::SupportViolation { index: i });
        }
        kl += qi * (qi / pi).ln();
    }
    Ok(kl.max(0.0))
}

/// Total-variation distance `½ Σ |q − p|`.
pub fn total_variation(q: &[f64], p: &[f64]) -> f64 {
    0.5 * q.iter().zip(p).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
