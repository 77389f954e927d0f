//! Full-rank perturbation tricks.
//!
//! If `T ~ Exp(Z)` is the winning time of competing exponential clocks with
//! rates `p̃(x)`, then `E[g(T)] = f(Z)` for each trick's `(g, f)` pair. With
//! full-rank Gumbel perturbations the perturbed max `V` gives
//! `T = e^{-c} e^{-V}`, so every trick is an average of `g` over MAP values.

use crate::error::{Error, Result};
use crate::exact::DEFAULT_ENUMERATION_CAP;
use crate::math::{digamma, ln_gamma, trigamma, Moments, EULER_GAMMA, PI2_OVER_6};
use crate::model::{Configuration, GraphicalModel};
use crate::rng;
use crate::solver::{Exhaustive, MapSolver, UnaryOffsets};
use rand::Rng;
use rayon::prelude::*;
use statrs::function::gamma::gamma;

/// A member of the trick family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trick {
    Gumbel,
    Exponential,
    /// `g(x) = x^α`, α > 0.
    Weibull(f64),
    /// `g(x) = x^α`, −1 < α < 0.
    Frechet(f64),
    Pareto,
    /// `g(x) = 1{x > t}`.
    Tail(f64),
}

/// What an estimator targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    /// The trick's own mean `f(Z)`.
    FZ,
    Z,
    LnZ,
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Target::FZ => "fz",
            Target::Z => "z",
            Target::LnZ => "lnz",
        })
    }
}

impl std::str::FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fz" | "f(z)" => Ok(Target::FZ),
            "z" => Ok(Target::Z),
            "lnz" | "ln_z" | "logz" => Ok(Target::LnZ),
            _ => Err(Error::InvalidArgument(format!("unknown target '{s}'"))),
        }
    }
}

impl std::fmt::Display for Trick {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Trick::Gumbel => f.write_str("gumbel"),
            Trick::Exponential => f.write_str("exponential"),
            Trick::Weibull(a) => write!(f, "weibull(alpha={a})"),
            Trick::Frechet(a) => write!(f, "frechet(alpha={a})"),
            Trick::Pareto => f.write_str("pareto"),
            Trick::Tail(t) => write!(f, "tail(t={t})"),
        }
    }
}

impl Trick {
    /// The Weibull/Fréchet family member for `alpha`, with the Gumbel trick at
    /// α = 0 and the Exponential trick at α = 1.
    pub fn from_alpha(alpha: f64) -> Result<Trick> {
        let trick = if alpha == 0.0 {
            Trick::Gumbel
        } else if alpha == 1.0 {
            Trick::Exponential
        } else if alpha > 0.0 {
            Trick::Weibull(alpha)
        } else {
            Trick::Frechet(alpha)
        };
        trick.validate()?;
        Ok(trick)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Trick::Weibull(a) if !(a > 0.0 && a.is_finite()) => {
                Err(Error::Domain(format!("Weibull trick needs alpha > 0, got {a}")))
            }
            Trick::Frechet(a) if !(a > -1.0 && a < 0.0) => Err(Error::Domain(format!(
                "Frechet trick needs -1 < alpha < 0, got {a}"
            ))),
            Trick::Tail(t) if !(t > 0.0 && t.is_finite()) => {
                Err(Error::Domain(format!("Tail trick needs t > 0, got {t}")))
            }
            _ => Ok(()),
        }
    }

    /// α of the Weibull/Fréchet family, if the trick belongs to it.
    pub fn alpha(&self) -> Option<f64> {
        match *self {
            Trick::Gumbel => Some(0.0),
            Trick::Exponential => Some(1.0),
            Trick::Weibull(a) | Trick::Frechet(a) => Some(a),
            _ => None,
        }
    }

    /// `g(x)`.
    pub fn g(&self, x: f64) -> Result<f64> {
        let ok = match self {
            Trick::Exponential | Trick::Weibull(_) | Trick::Tail(_) => x >= 0.0,
            _ => x > 0.0,
        };
        if !ok || x.is_nan() {
            return Err(Error::Domain(format!("{self}: g undefined at x = {x}")));
        }
        Ok(self.g_unchecked(x))
    }

    #[inline]
    fn g_unchecked(&self, x: f64) -> f64 {
        match *self {
            Trick::Gumbel => -x.ln() - EULER_GAMMA,
            Trick::Exponential => x,
            Trick::Weibull(a) | Trick::Frechet(a) => x.powf(a),
            Trick::Pareto => x.exp(),
            Trick::Tail(t) => {
                if x > t {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `g(e^{-c} e^{-v})` for a full-rank max value `v`.
    #[inline]
    pub fn g_of_max(&self, v: f64) -> f64 {
        match *self {
            // -ln(e^{-c} e^{-v}) - c = v exactly
            Trick::Gumbel => v,
            Trick::Weibull(a) | Trick::Frechet(a) => (-a * (EULER_GAMMA + v)).exp(),
            _ => self.g_unchecked(clock_time(v)),
        }
    }

    /// `f(Z) = E[g(T)]` for `T ~ Exp(Z)`.
    pub fn f_of_z(&self, z: f64) -> Result<f64> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::Domain(format!("Z must be positive, got {z}")));
        }
        Ok(match *self {
            Trick::Gumbel => z.ln(),
            Trick::Exponential => 1.0 / z,
            Trick::Weibull(a) | Trick::Frechet(a) => (ln_gamma(1.0 + a) - a * z.ln()).exp(),
            Trick::Pareto => {
                if z <= 1.0 {
                    return Err(Error::Domain(format!("Pareto trick needs Z > 1, got {z}")));
                }
                z / (z - 1.0)
            }
            Trick::Tail(t) => (-t * z).exp(),
        })
    }

    /// Recovers `Z` from a mean `m = f(Z)`.
    pub fn f_inverse(&self, m: f64) -> Result<f64> {
        let bad = match *self {
            Trick::Gumbel => !m.is_finite(),
            Trick::Exponential | Trick::Weibull(_) | Trick::Frechet(_) => !(m > 0.0),
            Trick::Pareto => !(m > 1.0),
            Trick::Tail(_) => !(m > 0.0 && m < 1.0),
        };
        if bad || m.is_nan() {
            return Err(Error::InverseDomain { mean: m });
        }
        Ok(match *self {
            Trick::Gumbel => m.exp(),
            Trick::Exponential => 1.0 / m,
            Trick::Weibull(a) | Trick::Frechet(a) => ((m.ln() - ln_gamma(1.0 + a)) / -a).exp(),
            Trick::Pareto => m / (m - 1.0),
            Trick::Tail(t) => -m.ln() / t,
        })
    }

    /// `ln f⁻¹(m)`, evaluated without leaving log space where possible.
    fn ln_f_inverse(&self, m: f64) -> Result<f64> {
        match *self {
            Trick::Gumbel if m.is_finite() => Ok(m),
            Trick::Exponential if m > 0.0 => Ok(-m.ln()),
            Trick::Weibull(a) | Trick::Frechet(a) if m > 0.0 => {
                Ok((m.ln() - ln_gamma(1.0 + a)) / -a)
            }
            _ => Ok(self.f_inverse(m)?.ln()),
        }
    }

    /// `d f⁻¹/dm`.
    fn f_inverse_derivative(&self, m: f64) -> f64 {
        match *self {
            Trick::Gumbel => m.exp(),
            Trick::Exponential => -1.0 / (m * m),
            Trick::Weibull(a) | Trick::Frechet(a) => {
                -self.f_inverse(m).unwrap_or(f64::NAN) / (a * m)
            }
            Trick::Pareto => -1.0 / ((m - 1.0) * (m - 1.0)),
            Trick::Tail(t) => -1.0 / (t * m),
        }
    }

    /// `var g(T)` for `T ~ Exp(Z)`; infinite outside the finite-variance range.
    pub fn g_variance(&self, z: f64) -> Result<f64> {
        self.f_of_z(z)?;
        Ok(match *self {
            Trick::Gumbel => PI2_OVER_6,
            Trick::Exponential => 1.0 / (z * z),
            Trick::Weibull(a) | Trick::Frechet(a) => {
                if a <= -0.5 {
                    f64::INFINITY
                } else {
                    (gamma(1.0 + 2.0 * a) - gamma(1.0 + a).powi(2)) * z.powf(-2.0 * a)
                }
            }
            Trick::Pareto => {
                if z <= 2.0 {
                    f64::INFINITY
                } else {
                    z / ((z - 1.0) * (z - 1.0) * (z - 2.0))
                }
            }
            Trick::Tail(t) => {
                let p = (-t * z).exp();
                p * (1.0 - p)
            }
        })
    }

    /// `var g(T) · (f⁻¹)'(f(Z))²`, the first-order variance of `Ẑ` per sample.
    pub fn delta_method_variance(&self, z: f64) -> Result<f64> {
        let m = self.f_of_z(z)?;
        let d = self.f_inverse_derivative(m);
        Ok(self.g_variance(z)? * d * d)
    }
}

/// Asymptotic variance coefficient of the `Z` estimator, `lim M·var(Ẑ)`, in
/// the closed forms tabulated for each trick.
pub fn asymptotic_variance(trick: Trick, z: f64) -> Result<f64> {
    trick.validate()?;
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Domain(format!("Z must be positive, got {z}")));
    }
    Ok(match trick {
        Trick::Gumbel => PI2_OVER_6 * z * z,
        Trick::Exponential => z * z,
        Trick::Weibull(a) | Trick::Frechet(a) => {
            if a <= -0.5 {
                return Err(Error::Domain(format!(
                    "Frechet asymptotic variance needs alpha > -1/2, got {a}"
                )));
            }
            // Γ(1+2α)/Γ(1+α)² computed in log space
            let ratio = (ln_gamma(1.0 + 2.0 * a) - 2.0 * ln_gamma(1.0 + a)).exp();
            (ratio - 1.0) / (a * a) * z * z
        }
        Trick::Pareto => {
            if z <= 2.0 {
                return Err(Error::Domain(format!("Pareto asymptotic variance needs Z > 2, got {z}")));
            }
            z * z / ((z - 2.0) * (z - 2.0))
        }
        Trick::Tail(t) => (1.0 - (-t * z).exp()).powi(2) / (t * t),
    })
}

/// `−ln(−ln u) − c`.
#[inline]
pub fn gumbel_from_uniform(u: f64) -> f64 {
    -(-u.ln()).ln() - EULER_GAMMA
}

/// One Gumbel(−c) draw (mean zero).
#[inline]
pub fn sample_gumbel<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return gumbel_from_uniform(u);
        }
    }
}

/// The clock time `e^{-c} e^{-v}` matching a full-rank max value `v`.
#[inline]
pub fn clock_time(v: f64) -> f64 {
    (-EULER_GAMMA - v).exp()
}

/// Draws full-rank Gumbel perturbed maxima of a model.
///
/// The model is flattened into a single joint variable and every joint
/// state receives independent Gumbel(−c) noise, so the max is
/// Gumbel(−c + ln Z) and the argmax is an exact Gibbs sample.
#[derive(Debug, Clone)]
pub struct FullRankSampler {
    solver: Exhaustive,
    joint: GraphicalModel,
    original: GraphicalModel,
}

impl FullRankSampler {
    pub fn new(model: &GraphicalModel) -> Result<Self> {
        Self::with_cap(model, DEFAULT_ENUMERATION_CAP)
    }

    pub fn with_cap(model: &GraphicalModel, cap: usize) -> Result<Self> {
        model.enumerable(cap)?;
        let joint = if model.variable_count() == 0 {
            GraphicalModel::new(vec![1], vec![])?
        } else {
            let all: Vec<usize> = (0..model.variable_count()).collect();
            model.merge_variables(&all, cap)?
        };
        Ok(FullRankSampler {
            solver: Exhaustive::new(&joint, cap)?,
            joint,
            original: model.clone(),
        })
    }

    fn offsets<R: Rng + ?Sized>(&self, rng: &mut R) -> UnaryOffsets {
        let mut offsets = UnaryOffsets::zeros(self.joint.cardinalities(), 1.0)
            .expect("unit scale is valid");
        for v in offsets.values_mut() {
            *v = sample_gumbel(rng);
        }
        offsets
    }

    /// One `(max value, argmax)` draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, Configuration) {
        let r = self.solver.solve(&self.offsets(rng), 0);
        (r.value, self.original.configuration_at(r.config[0]))
    }

    pub fn sample_value<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.solver.solve_value(&self.offsets(rng), 0)
    }
}

/// One full-rank perturbed MAP draw: value ~ Gumbel(−c + ln Z), argmax ~ p.
pub fn full_rank_max_sample<R: Rng + ?Sized>(
    model: &GraphicalModel,
    rng: &mut R,
) -> Result<(f64, Configuration)> {
    Ok(FullRankSampler::new(model)?.sample(rng))
}

/// `count` full-rank max values; draw `m` uses stream `(seed, m)`.
pub fn full_rank_values(model: &GraphicalModel, count: usize, seed: u64) -> Result<Vec<f64>> {
    let sampler = FullRankSampler::new(model)?;
    Ok((0..count)
        .into_par_iter()
        .map(|m| sampler.sample_value(&mut rng::stream(seed, &[m as u64])))
        .collect())
}

/// A point estimate with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub target: Target,
    pub estimate: f64,
    /// Delta-method (asymptotic) standard error from the sample variance of
    /// `g`; infinite when fewer samples than needed for a finite variance.
    pub std_error: f64,
    pub sample_count: usize,
    pub trick: Trick,
    pub debiased: bool,
}

/// Estimates `f(Z)`, `Z` or `ln Z` from full-rank max values.
///
/// With `debias`, corrections are applied where the finite-`M` bias is known
/// in closed form: Exponential `ln Z` (subtract `ln M − ψ(M)`), Exponential
/// `Z` (scale by `(M−1)/M`) and Gumbel `Z` (divide by `Γ(1−1/M)^M e^{-c}`).
/// `debiased` in the report says whether a correction was applied.
pub fn estimate(trick: Trick, values: &[f64], target: Target, debias: bool) -> Result<EstimateReport> {
    trick.validate()?;
    let m = values.len();
    if m == 0 {
        return Err(Error::InvalidArgument("estimate needs at least one value".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("max values must be finite".into()));
    }
    let ys: Vec<f64> = values.iter().map(|&v| trick.g_of_max(v)).collect();
    let moments = Moments::of(&ys);
    let mean = moments.mean;
    let se_mean = if m > 1 { moments.std_error() } else { f64::INFINITY };
    let mf = m as f64;

    let (mut est, mut se) = match target {
        Target::FZ => (mean, se_mean),
        Target::Z => {
            let z = trick.f_inverse(mean)?;
            (z, trick.f_inverse_derivative(mean).abs() * se_mean)
        }
        Target::LnZ => {
            let ln_z = trick.ln_f_inverse(mean)?;
            let z = trick.f_inverse(mean).unwrap_or(f64::NAN);
            let d = trick.f_inverse_derivative(mean) / z;
            let se = if matches!(trick, Trick::Gumbel) { se_mean } else { d.abs() * se_mean };
            (ln_z, se)
        }
    };
    if target == Target::Z && m < 3 {
        se = f64::INFINITY;
    }
    let mut debiased = false;
    if debias {
        match (trick, target) {
            (Trick::Exponential, Target::LnZ) => {
                est -= mf.ln() - digamma(mf);
                debiased = true;
            }
            (Trick::Exponential, Target::Z) if m >= 2 => {
                let k = (mf - 1.0) / mf;
                est *= k;
                se *= k;
                debiased = true;
            }
            (Trick::Gumbel, Target::Z) if m >= 2 => {
                let ln_k = mf * ln_gamma(1.0 - 1.0 / mf) - EULER_GAMMA;
                let k = (-ln_k).exp();
                est *= k;
                se *= k;
                debiased = true;
            }
            _ => {}
        }
    }
    Ok(EstimateReport {
        target,
        estimate: est,
        std_error: se,
        sample_count: m,
        trick,
        debiased,
    })
}

/// Point estimate only, without debiasing.
fn point_estimate(trick: Trick, values: &[f64], target: Target) -> Result<f64> {
    let mean = values.iter().map(|&v| trick.g_of_max(v)).sum::<f64>() / values.len() as f64;
    match target {
        Target::FZ => Ok(mean),
        Target::Z => trick.f_inverse(mean),
        Target::LnZ => trick.ln_f_inverse(mean),
    }
}

/// Closed-form finite-`M` statistics of an estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticStats {
    pub bias_sq: f64,
    pub variance: f64,
    pub mse: f64,
    /// false where bias or variance is infinite.
    pub valid: bool,
}

impl AnalyticStats {
    fn new(bias_sq: f64, variance: f64) -> Self {
        let valid = bias_sq.is_finite() && variance.is_finite();
        AnalyticStats {
            bias_sq,
            variance,
            mse: bias_sq + variance,
            valid,
        }
    }
}

/// Exact bias², variance and MSE of the plain Gumbel and Exponential
/// estimators of `Z` and `ln Z` built from `M` samples.
pub fn analytic_stats(trick: Trick, target: Target, z: f64, m: usize) -> Result<AnalyticStats> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Domain(format!("Z must be positive, got {z}")));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("M must be at least 1".into()));
    }
    let mf = m as f64;
    let inf = f64::INFINITY;
    Ok(match (trick, target) {
        (Trick::Gumbel, Target::Z) => {
            // Ẑ = exp(mean V): moments from the Gumbel MGF E[e^{sV}] = Γ(1−s) e^{s(ln Z − c)}
            let bias_sq = if m >= 2 {
                let r = (mf * ln_gamma(1.0 - 1.0 / mf) - EULER_GAMMA).exp();
                z * z * (r - 1.0).powi(2)
            } else {
                inf
            };
            let variance = if m >= 3 {
                let a = (mf * ln_gamma(1.0 - 2.0 / mf) - 2.0 * EULER_GAMMA).exp();
                let b = (2.0 * mf * ln_gamma(1.0 - 1.0 / mf) - 2.0 * EULER_GAMMA).exp();
                z * z * (a - b)
            } else {
                inf
            };
            AnalyticStats::new(bias_sq, variance)
        }
        (Trick::Exponential, Target::Z) => {
            let bias_sq = if m >= 2 { z * z / ((mf - 1.0) * (mf - 1.0)) } else { inf };
            let variance = if m >= 3 {
                z * z * mf * mf / ((mf - 1.0) * (mf - 1.0) * (mf - 2.0))
            } else {
                inf
            };
            AnalyticStats::new(bias_sq, variance)
        }
        (Trick::Gumbel, Target::LnZ) => AnalyticStats::new(0.0, PI2_OVER_6 / mf),
        (Trick::Exponential, Target::LnZ) => {
            let bias = mf.ln() - digamma(mf);
            AnalyticStats::new(bias * bias, trigamma(mf))
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "no closed form for {trick} with target {target}"
            )))
        }
    })
}

/// Posterior mean of `Z` under the Jeffreys prior given exponential-scale
/// samples `X_m ~ Exp(Z)`: `M / Σ X_m`.
pub fn bayes_posterior_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("need at least one value".into()));
    }
    if values.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Domain("exponential samples must be positive".into()));
    }
    let sum: f64 = values.iter().sum();
    if sum == 0.0 {
        return Err(Error::Domain("zero-sum input".into()));
    }
    Ok(values.len() as f64 / sum)
}

/// One cell of an MSE study.
#[derive(Debug, Clone, PartialEq)]
pub struct MseRow {
    pub alpha: f64,
    pub m: usize,
    pub target: Target,
    pub mean: f64,
    pub bias: f64,
    pub bias_sq: f64,
    pub variance: f64,
    pub mse: f64,
    /// Standard errors of the empirical bias², variance and MSE.
    pub se_bias_sq: f64,
    pub se_variance: f64,
    pub se_mse: f64,
    /// Whether the estimator has infinite variance, so the empirical MSE
    /// does not settle as `K` grows.
    pub unstable: bool,
}

/// Empirical bias, variance and MSE over `k` replicate estimators.
///
/// All α values share noise: replicate `r` of the `i`-th sample size draws
/// its `M` max values from stream `(seed, r, i)`.
pub fn mse_sweep(
    model: &GraphicalModel,
    alphas: &[f64],
    ms: &[usize],
    target: Target,
    k: usize,
    seed: u64,
) -> Result<Vec<MseRow>> {
    if k < 2 {
        return Err(Error::InvalidArgument("need at least two replicates".into()));
    }
    if ms.contains(&0) {
        return Err(Error::InvalidArgument("M must be at least 1".into()));
    }
    let tricks = alphas.iter().map(|&a| Trick::from_alpha(a)).collect::<Result<Vec<_>>>()?;
    let summary = crate::exact::summarize(model)?;
    let sampler = FullRankSampler::new(model)?;
    let mut rows = Vec::with_capacity(alphas.len() * ms.len());
    for (cell, &m) in ms.iter().enumerate() {
        // per replicate: one estimate per α
        let estimates: Vec<Vec<f64>> = (0..k)
            .into_par_iter()
            .map(|r| {
                let mut rng = rng::stream(seed, &[r as u64, cell as u64]);
                let values: Vec<f64> = (0..m).map(|_| sampler.sample_value(&mut rng)).collect();
                tricks.iter().map(|&t| point_estimate(t, &values, target)).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for (ai, (&alpha, trick)) in alphas.iter().zip(&tricks).enumerate() {
            let truth = match target {
                Target::Z => summary.partition(),
                Target::LnZ => summary.log_partition,
                Target::FZ => trick.f_of_z(summary.partition())?,
            };
            let ys: Vec<f64> = estimates.iter().map(|e| e[ai]).collect();
            rows.push(error_moments(&ys, truth, alpha, m, target));
        }
    }
    Ok(rows)
}

fn error_moments(ys: &[f64], truth: f64, alpha: f64, m: usize, target: Target) -> MseRow {
    let k = ys.len() as f64;
    let mom = Moments::of(ys);
    let bias = mom.mean - truth;
    let sd = mom.variance.sqrt();
    let sq: Vec<f64> = ys.iter().map(|y| (y - truth) * (y - truth)).collect();
    let sq_mom = Moments::of(&sq);
    let se_bias_sq =
        ((2.0 * bias.abs() * sd / k.sqrt()).powi(2) + 2.0 * mom.variance.powi(2) / (k * k)).sqrt();
    MseRow {
        alpha,
        m,
        target,
        mean: mom.mean,
        bias,
        bias_sq: bias * bias,
        variance: mom.variance,
        mse: sq_mom.mean,
        se_bias_sq,
        se_variance: mom.variance_std_error(),
        se_mse: sq_mom.std_error(),
        unstable: target == Target::Z && (m <= 2 || alpha < 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Factor;

    fn six_model() -> GraphicalModel {
        let l2 = 2f64.ln();
        GraphicalModel::new(vec![2, 2], vec![Factor::new(vec![0, 1], vec![l2, 0.0, 0.0, l2])])
            .unwrap()
    }

    #[test]
    fn gumbel_plug_in() {
        let e = std::f64::consts::E;
        assert!((gumbel_from_uniform(1.0 / e) + EULER_GAMMA).abs() < 1e-15);
        assert!((gumbel_from_uniform((-e).exp()) + 1.0 + EULER_GAMMA).abs() < 1e-12);
    }

    #[test]
    fn gumbel_mean_zero() {
        let mut rng = rng::stream(5, &[]);
        let n = 1_000_000;
        let mean = (0..n).map(|_| sample_gumbel(&mut rng)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 * PI2_OVER_6.sqrt() / 1e3);
    }

    #[test]
    fn g_examples() {
        assert!((Trick::Gumbel.g(1.0).unwrap() + EULER_GAMMA).abs() < 1e-15);
        assert_eq!(Trick::Weibull(2.0).g(3.0).unwrap(), 9.0);
        assert_eq!(Trick::Tail(1.0).g(0.5).unwrap(), 0.0);
        assert!(Trick::Gumbel.g(0.0).is_err());
        assert!(Trick::Exponential.g(-1.0).is_err());
    }

    #[test]
    fn f_examples() {
        assert_eq!(Trick::Exponential.f_of_z(2.0).unwrap(), 0.5);
        assert_eq!(Trick::Exponential.f_inverse(0.5).unwrap(), 2.0);
        for z in [0.5, 1.0, 3.0] {
            let w = Trick::Weibull(1.0).f_of_z(z).unwrap();
            assert!((w - Trick::Exponential.f_of_z(z).unwrap()).abs() < 1e-14);
        }
        assert!(Trick::Pareto.f_of_z(1.0).is_err());
        assert!(Trick::Pareto.f_inverse(1.0).is_err());
        assert!(matches!(Trick::Tail(1.0).f_inverse(0.0), Err(Error::InverseDomain { .. })));
        assert!(Trick::Tail(1.0).f_inverse(1.5).is_err());
        assert!(Trick::Weibull(0.5).f_inverse(0.0).is_err());
    }

    #[test]
    fn from_alpha_routes_limits() {
        assert_eq!(Trick::from_alpha(0.0).unwrap(), Trick::Gumbel);
        assert_eq!(Trick::from_alpha(1.0).unwrap(), Trick::Exponential);
        assert_eq!(Trick::from_alpha(-0.3).unwrap(), Trick::Frechet(-0.3));
        assert!(Trick::from_alpha(-1.0).is_err());
    }

    #[test]
    fn asymptotic_variance_examples() {
        assert!((asymptotic_variance(Trick::Gumbel, 1.0).unwrap() - 1.644_934_066_848_226_4).abs() < 1e-12);
        assert!((asymptotic_variance(Trick::Weibull(1.0), 1.0).unwrap() - 1.0).abs() < 1e-12);
        let near = asymptotic_variance(Trick::Weibull(1e-3), 1.0).unwrap();
        assert!((near - PI2_OVER_6).abs() < 1e-2);
        let near = asymptotic_variance(Trick::Frechet(-1e-3), 1.0).unwrap();
        assert!((near - PI2_OVER_6).abs() < 1e-2);
        assert!(asymptotic_variance(Trick::Frechet(-0.6), 1.0).is_err());
        assert!(asymptotic_variance(Trick::Pareto, 2.0).is_err());
    }

    #[test]
    fn delta_method_agrees_with_table_for_power_family() {
        for trick in [Trick::Gumbel, Trick::Exponential, Trick::Weibull(0.5), Trick::Frechet(-0.3)] {
            for z in [0.5, 1.0, 6.0] {
                let a = asymptotic_variance(trick, z).unwrap();
                let b = trick.delta_method_variance(z).unwrap();
                assert!((a - b).abs() < 1e-9 * a, "{trick} {z}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn single_value_gumbel_estimate_is_value() {
        let r = estimate(Trick::Gumbel, &[0.37], Target::LnZ, false).unwrap();
        assert_eq!(r.estimate, 0.37);
    }

    #[test]
    fn exponential_debias_at_one_matches_gumbel_form() {
        let v = 0.8;
        let r = estimate(Trick::Exponential, &[v], Target::LnZ, true).unwrap();
        let t = clock_time(v);
        assert!((r.estimate - (-t.ln() - EULER_GAMMA)).abs() < 1e-12);
        assert!(r.debiased);
        // and that is the Gumbel estimate
        assert!((r.estimate - v).abs() < 1e-12);
    }

    #[test]
    fn bayes_examples() {
        assert_eq!(bayes_posterior_mean(&[0.5]).unwrap(), 2.0);
        assert_eq!(bayes_posterior_mean(&[1.0; 4]).unwrap(), 1.0);
        let vs = [0.3, -0.2, 1.1, 0.05];
        let xs: Vec<f64> = vs.iter().map(|&v| clock_time(v)).collect();
        let e = estimate(Trick::Exponential, &vs, Target::Z, false).unwrap();
        assert!((bayes_posterior_mean(&xs).unwrap() - e.estimate).abs() < 1e-12 * e.estimate);
        assert!(bayes_posterior_mean(&[]).is_err());
    }

    #[test]
    fn analytic_examples() {
        let s = analytic_stats(Trick::Exponential, Target::Z, 1.0, 10).unwrap();
        assert!((s.mse - 1.0 / 6.0).abs() < 1e-14);
        let s = analytic_stats(Trick::Gumbel, Target::LnZ, 3.0, 6).unwrap();
        assert!((s.mse - std::f64::consts::PI.powi(2) / 36.0).abs() < 1e-15);
        assert!(!analytic_stats(Trick::Gumbel, Target::Z, 1.0, 2).unwrap().valid);
        assert!(!analytic_stats(Trick::Exponential, Target::Z, 1.0, 1).unwrap().valid);
        assert!(analytic_stats(Trick::Exponential, Target::LnZ, 1.0, 1).unwrap().valid);
        assert!(analytic_stats(Trick::Pareto, Target::Z, 3.0, 10).is_err());
    }

    #[test]
    fn one_state_model_max_is_standard() {
        let m = GraphicalModel::new(vec![1], vec![]).unwrap();
        let mut rng = rng::stream(3, &[]);
        let s = FullRankSampler::new(&m).unwrap();
        let n = 200_000;
        let mean = (0..n).map(|_| s.sample_value(&mut rng)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 * (PI2_OVER_6 / n as f64).sqrt());
    }

    #[test]
    fn exponential_z_estimate_on_six_model() {
        let m = six_model();
        let values = full_rank_values(&m, 10_000, 9).unwrap();
        let r = estimate(Trick::Exponential, &values, Target::Z, false).unwrap();
        assert!((r.estimate - 6.0).abs() < 3.0 * r.std_error, "{r:?}");
    }
}
