//! Sequential Gibbs sampler driven by clamped `𝒰(α)` bounds.
//!
//! Variable `j` takes state `s` with probability
//! `exp(𝒰(x_<j, s) − 𝒰(x_<j))`, where `𝒰(prefix)` is the upper bound of the
//! model with `prefix` clamped. The leftover mass rejects the sample and the
//! run restarts from the first variable.

use super::{PerturbationKind, Perturber};
use crate::error::{Error, Result};
use crate::math::{ln_gamma_ratio, LogSumExp, EULER_GAMMA};
use crate::model::{Configuration, GraphicalModel};
use crate::rng;
use crate::solver::{SolverChoice, UnaryOffsets};
use rand::Rng;
use rayon::prelude::*;

const CHOICE_STREAM: u64 = u64::MAX;

/// Acceptance probabilities at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepProbabilities {
    /// 0-based variable index.
    pub variable: usize,
    pub probabilities: Vec<f64>,
    pub reject: f64,
}

/// Outcome of one sampler run.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerTrace {
    pub accepted: bool,
    pub config: Option<Configuration>,
    pub restarts: usize,
    /// Steps of the final attempt.
    pub per_step: Vec<StepProbabilities>,
    /// Some step's estimated probabilities summed above one; its reject
    /// mass was set to zero and the state probabilities renormalized.
    pub clamped_reject: bool,
}

/// Monte Carlo `ln E[e^{−αU}]` with `m` draws from stream `(seed, path)`.
fn log_expectation(
    perturber: &Perturber,
    alpha: f64,
    m: usize,
    seed: u64,
    path: &[u64],
    offsets: &mut UnaryOffsets,
) -> f64 {
    let mut rng = rng::stream(seed, path);
    if perturber.is_deterministic() {
        return -alpha * perturber.draw_value(&mut rng, offsets);
    }
    let mut acc = LogSumExp::new();
    for _ in 0..m {
        acc.push(-alpha * perturber.draw_value(&mut rng, offsets));
    }
    acc.value() - (m as f64).ln()
}

struct Context<'a> {
    model: &'a GraphicalModel,
    alpha: f64,
    m_inner: usize,
    solver: SolverChoice,
    seed: u64,
}

impl Context<'_> {
    /// `𝒰(prefix)` from fresh draws on stream `path`.
    fn upper(&self, prefix: &[usize], path: &[u64]) -> Result<f64> {
        let perturber = Perturber::new(
            self.model,
            PerturbationKind::Partial {
                prefix: prefix.to_vec(),
            },
            self.solver,
        )?;
        let mut offsets = perturber.offsets();
        let free = (self.model.variable_count() - prefix.len()) as f64;
        let le = log_expectation(&perturber, self.alpha, self.m_inner, self.seed, path, &mut offsets);
        Ok(free * (ln_gamma_ratio(self.alpha) + EULER_GAMMA) - le / self.alpha)
    }

    fn run(&self, k: u64, max_restarts: usize) -> Result<SamplerTrace> {
        let n = self.model.variable_count();
        let cards = self.model.cardinalities();
        let mut clamped_reject = false;
        for attempt in 0..=max_restarts {
            let a = attempt as u64;
            let mut choice = rng::stream(self.seed, &[k, a, CHOICE_STREAM]);
            let mut x = Vec::with_capacity(n);
            let mut steps = Vec::with_capacity(n);
            let mut rejected = false;
            for j in 0..n {
                let step = j as u64;
                let base = self.upper(&x, &[k, a, step, 0])?;
                let mut probs = Vec::with_capacity(cards[j]);
                x.push(0);
                for s in 0..cards[j] {
                    x[j] = s;
                    let u = self.upper(&x, &[k, a, step, 1 + s as u64])?;
                    probs.push((u - base).exp());
                }
                x.pop();
                let total: f64 = probs.iter().sum();
                let mut reject = 1.0 - total;
                if reject < 0.0 {
                    clamped_reject = true;
                    reject = 0.0;
                    probs.iter_mut().for_each(|p| *p /= total);
                }
                let u: f64 = choice.random();
                let mut cum = 0.0;
                let mut picked = None;
                for (s, &p) in probs.iter().enumerate() {
                    cum += p;
                    if u < cum {
                        picked = Some(s);
                        break;
                    }
                }
                // rounding can leave u just above the cumulative sum after renormalizing
                if picked.is_none() && reject == 0.0 {
                    picked = probs.iter().rposition(|&p| p > 0.0);
                }
                steps.push(StepProbabilities {
                    variable: j,
                    probabilities: probs,
                    reject,
                });
                match picked {
                    Some(s) => x.push(s),
                    None => {
                        rejected = true;
                        break;
                    }
                }
            }
            if !rejected {
                return Ok(SamplerTrace {
                    accepted: true,
                    config: Some(Configuration(x)),
                    restarts: attempt,
                    per_step: steps,
                    clamped_reject,
                });
            }
            if attempt == max_restarts {
                return Ok(SamplerTrace {
                    accepted: false,
                    config: None,
                    restarts: attempt,
                    per_step: steps,
                    clamped_reject,
                });
            }
        }
        unreachable!("loop returns on its last attempt")
    }
}

fn validate(alpha: f64, m_inner: usize) -> Result<()> {
    if !(alpha > -1.0 && alpha.is_finite()) || alpha == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "sampler needs alpha in (-1, 0) or (0, inf), got {alpha}"
        )));
    }
    if m_inner == 0 {
        return Err(Error::InvalidArgument("M_inner must be at least 1".into()));
    }
    Ok(())
}

/// One sampler run, restarting at most `max_restarts` times.
///
/// Inner expectations for step `j` of attempt `a` use streams
/// `(seed, 0, a, j, 0)` for the current prefix and `(seed, 0, a, j, 1 + s)`
/// for the branch `x_j = s`; the state choices use `(seed, 0, a, u64::MAX)`.
pub fn sequential_sample(
    model: &GraphicalModel,
    alpha: f64,
    m_inner: usize,
    solver: SolverChoice,
    seed: u64,
    max_restarts: usize,
) -> Result<SamplerTrace> {
    validate(alpha, m_inner)?;
    Context {
        model,
        alpha,
        m_inner,
        solver,
        seed,
    }
    .run(0, max_restarts)
}

/// `count` independent runs; run `k` uses the streams of
/// [`sequential_sample`] with `k` in place of 0.
pub fn sequential_samples(
    model: &GraphicalModel,
    alpha: f64,
    m_inner: usize,
    solver: SolverChoice,
    seed: u64,
    max_restarts: usize,
    count: usize,
) -> Result<Vec<SamplerTrace>> {
    validate(alpha, m_inner)?;
    let ctx = Context {
        model,
        alpha,
        m_inner,
        solver,
        seed,
    };
    (0..count as u64)
        .into_par_iter()
        .map(|k| ctx.run(k, max_restarts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{summarize, total_variation};
    use crate::model::Factor;

    #[test]
    fn single_variable_probabilities_are_exact_in_expectation() {
        // with n = 1 every branch is fully clamped: p(s) = e^{φ(s)} / exp 𝒰
        let m = GraphicalModel::new(vec![3], vec![Factor::new(vec![0], vec![0.4, -0.2, 0.0])]).unwrap();
        let t = sequential_sample(&m, 1.0, 200_000, SolverChoice::Exhaustive, 5, 100).unwrap();
        let gibbs = summarize(&m).unwrap().gibbs;
        let p = &t.per_step[0];
        let total: f64 = p.probabilities.iter().sum();
        for (a, b) in p.probabilities.iter().zip(&gibbs) {
            assert!((a / total - b).abs() < 1e-12);
        }
        assert!((total - 1.0).abs() < 0.02, "{total}");
    }

    #[test]
    fn flat_model_rarely_rejects() {
        let m = GraphicalModel::new(vec![2, 2], vec![]).unwrap();
        let traces = sequential_samples(&m, 0.5, 10_000, SolverChoice::Exhaustive, 3, 50, 100).unwrap();
        let restarts: usize = traces.iter().map(|t| t.restarts).sum();
        let attempts = restarts + traces.len();
        assert!((restarts as f64 / attempts as f64) <= 0.05, "{restarts}/{attempts}");
        assert!(traces.iter().all(|t| t.accepted));
    }

    #[test]
    fn two_var_model_is_roughly_gibbs() {
        let l2 = 2f64.ln();
        let m = GraphicalModel::new(vec![2, 2], vec![Factor::new(vec![0, 1], vec![l2, 0.0, 0.0, l2])])
            .unwrap();
        let traces = sequential_samples(&m, 1.0, 2_000, SolverChoice::Exhaustive, 11, 100, 2_000).unwrap();
        let mut q = [0.0; 4];
        for t in &traces {
            q[m.index_of(t.config.as_ref().unwrap().as_slice())] += 1.0 / traces.len() as f64;
        }
        let p = summarize(&m).unwrap().gibbs;
        assert!(total_variation(&q, &p) < 0.05);
        for t in &traces {
            for s in &t.per_step {
                assert!(s.reject >= 0.0);
                assert!(s.probabilities.iter().sum::<f64>() <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn rejects_alpha_zero() {
        let m = GraphicalModel::new(vec![2], vec![]).unwrap();
        assert!(sequential_sample(&m, 0.0, 10, SolverChoice::Exhaustive, 0, 1).is_err());
    }
}
