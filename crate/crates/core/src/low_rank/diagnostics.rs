//! Error identities relating bound gaps, sampling error and entropy.

use super::{PerturbationKind, Perturber};
use crate::error::{Error, Result};
use crate::exact::{entropy, kl_divergence, summarize};
use crate::math::Moments;
use crate::model::GraphicalModel;
use crate::solver::SolverChoice;
use rayon::prelude::*;

/// Smallest sample count accepted by [`diagnostics`].
pub const MIN_DIAGNOSTIC_SAMPLES: usize = 1000;

/// Empirical argmax laws and the quantities linking them to `ln Z`.
///
/// `q_sum` is the law of the sum-unary maximizer `x*`, `q_avg` that of the
/// average-unary maximizer `x**`. Standard errors are Monte Carlo errors of
/// the sample means involved, with plug-in entropies and KLs treated by the
/// delta method.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub m: usize,
    pub log_partition: f64,
    pub q_sum: Vec<f64>,
    pub q_avg: Vec<f64>,
    /// `B(p) = Σ_i E[γ_i(x*_i)]`
    pub entropy_bound_b: f64,
    pub entropy_bound_b_se: f64,
    /// `(1/n) Σ_i E[γ_i(x**_i)]`
    pub avg_noise_bound: f64,
    pub avg_noise_bound_se: f64,
    /// `𝒰(0) = E[U]`
    pub upper0: f64,
    pub upper0_se: f64,
    /// `ℒ(0) = E[L]`
    pub lower0: f64,
    pub lower0_se: f64,
    pub gap_upper: f64,
    pub gap_lower: f64,
    pub entropy_q_sum: f64,
    pub entropy_q_sum_se: f64,
    pub entropy_q_avg: f64,
    pub entropy_q_avg_se: f64,
    pub kl_sum: f64,
    pub kl_sum_se: f64,
    pub kl_avg: f64,
    pub kl_avg_se: f64,
}

impl DiagnosticsReport {
    /// `(gap_upper + kl_sum) − (B − H(q_sum))`, zero in exact arithmetic.
    pub fn identity_residual(&self) -> f64 {
        (self.gap_upper + self.kl_sum) - (self.entropy_bound_b - self.entropy_q_sum)
    }

    pub fn identity_se(&self) -> f64 {
        hypot_all(&[self.upper0_se, self.kl_sum_se, self.entropy_bound_b_se, self.entropy_q_sum_se])
    }

    /// `gap_lower − kl_avg`, non-negative in expectation.
    pub fn lower_gap_slack(&self) -> f64 {
        self.gap_lower - self.kl_avg
    }

    pub fn lower_gap_se(&self) -> f64 {
        self.lower0_se.hypot(self.kl_avg_se)
    }

    /// `H(q_avg) − (1/n) Σ_i E[γ_i(x**_i)]`, non-negative in expectation.
    pub fn entropy_slack(&self) -> f64 {
        self.entropy_q_avg - self.avg_noise_bound
    }

    pub fn entropy_slack_se(&self) -> f64 {
        self.entropy_q_avg_se.hypot(self.avg_noise_bound_se)
    }
}

fn hypot_all(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Draws {
    values: Vec<f64>,
    indices: Vec<usize>,
    noise: Vec<f64>,
}

fn draws(model: &GraphicalModel, perturber: &Perturber, m: usize, seed: u64, stream: u64) -> Draws {
    let raw: Vec<(f64, usize, f64)> = (0..m as u64)
        .into_par_iter()
        .map(|i| {
            let s = perturber.draw_at(seed, &[stream, i]);
            (s.value, model.index_of(s.config.as_slice()), s.noise_at_config)
        })
        .collect();
    Draws {
        values: raw.iter().map(|r| r.0).collect(),
        indices: raw.iter().map(|r| r.1).collect(),
        noise: raw.iter().map(|r| r.2).collect(),
    }
}

fn frequencies(indices: &[usize], size: usize) -> Vec<f64> {
    let mut q = vec![0.0; size];
    for &i in indices {
        q[i] += 1.0;
    }
    let m = indices.len() as f64;
    q.iter_mut().for_each(|v| *v /= m);
    q
}

/// Adds `1/(M·|supp p|)` to every configuration in the support of `p`,
/// then renormalizes.
fn smoothed(q: &[f64], p: &[f64], m: usize) -> Vec<f64> {
    let support = p.iter().filter(|&&v| v > 0.0).count() as f64;
    let pseudo = 1.0 / (m as f64 * support);
    let mut s: Vec<f64> = q
        .iter()
        .zip(p)
        .map(|(&qi, &pi)| if pi > 0.0 { qi + pseudo } else { qi })
        .collect();
    let total: f64 = s.iter().sum();
    s.iter_mut().for_each(|v| *v /= total);
    s
}

/// Plug-in entropy and KL with delta-method SEs from per-draw log terms.
fn entropy_and_kl(indices: &[usize], q: &[f64], p: &[f64]) -> Result<(f64, f64, f64, f64)> {
    let m = indices.len();
    let h = entropy(q)?;
    let qs = smoothed(q, p, m);
    let kl = kl_divergence(&qs, p)?;
    let neg_log_q: Vec<f64> = indices.iter().map(|&i| -q[i].ln()).collect();
    let log_ratio: Vec<f64> = indices.iter().map(|&i| (qs[i] / p[i]).ln()).collect();
    Ok((h, Moments::of(&neg_log_q).std_error(), kl, Moments::of(&log_ratio).std_error()))
}

/// Runs `m` sum-unary draws (streams `(seed, 0, i)`) and `m` average-unary
/// draws (streams `(seed, 1, i)`) and compares them with the exact model.
pub fn diagnostics(
    model: &GraphicalModel,
    m: usize,
    solver: SolverChoice,
    seed: u64,
) -> Result<DiagnosticsReport> {
    if m < MIN_DIAGNOSTIC_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "diagnostics need M >= {MIN_DIAGNOSTIC_SAMPLES}, got {m}"
        )));
    }
    let n = model.variable_count();
    if n == 0 {
        return Err(Error::InvalidArgument("diagnostics need at least one variable".into()));
    }
    let summary = summarize(model)?;
    let p = &summary.gibbs;
    let size = p.len();

    let sum = draws(model, &Perturber::new(model, PerturbationKind::SumUnary, solver)?, m, seed, 0);
    let avg = draws(model, &Perturber::new(model, PerturbationKind::AvgUnary, solver)?, m, seed, 1);

    let q_sum = frequencies(&sum.indices, size);
    let q_avg = frequencies(&avg.indices, size);
    let (entropy_q_sum, entropy_q_sum_se, kl_sum, kl_sum_se) = entropy_and_kl(&sum.indices, &q_sum, p)?;
    let (entropy_q_avg, entropy_q_avg_se, kl_avg, kl_avg_se) = entropy_and_kl(&avg.indices, &q_avg, p)?;

    let u = Moments::of(&sum.values);
    let l = Moments::of(&avg.values);
    let b = Moments::of(&sum.noise);
    let avg_noise: Vec<f64> = avg.noise.iter().map(|g| g / n as f64).collect();
    let g = Moments::of(&avg_noise);

    Ok(DiagnosticsReport {
        m,
        log_partition: summary.log_partition,
        q_sum,
        q_avg,
        entropy_bound_b: b.mean,
        entropy_bound_b_se: b.std_error(),
        avg_noise_bound: g.mean,
        avg_noise_bound_se: g.std_error(),
        upper0: u.mean,
        upper0_se: u.std_error(),
        lower0: l.mean,
        lower0_se: l.std_error(),
        gap_upper: u.mean - summary.log_partition,
        gap_lower: summary.log_partition - l.mean,
        entropy_q_sum,
        entropy_q_sum_se,
        entropy_q_avg,
        entropy_q_avg_se,
        kl_sum,
        kl_sum_se,
        kl_avg,
        kl_avg_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{spin_glass_grid, Coupling};

    #[test]
    fn flat_model_terms_vanish() {
        let m = GraphicalModel::new(vec![2, 2], vec![]).unwrap();
        let r = diagnostics(&m, 20_000, SolverChoice::Exhaustive, 1).unwrap();
        assert!(r.gap_upper.abs() < 4.0 * r.upper0_se);
        assert!(r.kl_sum < 1e-3);
        assert!((r.entropy_bound_b - 4f64.ln()).abs() < 4.0 * r.entropy_bound_b_se);
        assert!(r.identity_residual().abs() < 1e-3);
    }

    #[test]
    fn identities_on_small_grid() {
        let m = spin_glass_grid(2, 3, 1.0, Coupling::Mixed, 5).unwrap();
        let r = diagnostics(&m, 20_000, SolverChoice::Exhaustive, 2).unwrap();
        assert!(r.identity_residual().abs() <= 4.0 * r.identity_se(), "{r:?}");
        assert!(r.lower_gap_slack() >= -3.0 * r.lower_gap_se());
        assert!(r.entropy_slack() >= -4.0 * r.entropy_slack_se());
        for q in [&r.q_sum, &r.q_avg] {
            assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn too_few_samples() {
        let m = GraphicalModel::new(vec![2], vec![]).unwrap();
        assert!(diagnostics(&m, 10, SolverChoice::Exhaustive, 0).is_err());
    }
}
