//! `𝒰(α)`, `ℒ(α)` and subset bound estimators.

use super::{check_alpha, PerturbationKind, Perturber};
use crate::error::{Error, Result};
use crate::math::{ln_gamma_ratio, log_mean_exp, Moments, EULER_GAMMA, PI2_OVER_6};
use crate::model::GraphicalModel;
use crate::solver::SolverChoice;
use rayon::prelude::*;

/// Which bound a report refers to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundKind {
    /// `𝒰(α) ≥ ln Z` from sum-unary perturbations.
    Upper,
    /// `ℒ(α) ≤ ln Z` from average-unary perturbations.
    LowerAvg,
    /// Lower bound from one Gumbel per joint setting of the listed variables.
    LowerSubset(Vec<usize>),
}

impl std::fmt::Display for BoundKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundKind::Upper => f.write_str("upper"),
            BoundKind::LowerAvg => f.write_str("lower_avg"),
            BoundKind::LowerSubset(s) => {
                let names: Vec<String> = s.iter().map(|v| v.to_string()).collect();
                write!(f, "lower_subset({})", names.join(" "))
            }
        }
    }
}

/// One bound evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub alpha: f64,
    pub bound: BoundKind,
    pub estimate: f64,
    pub std_error: f64,
    pub m: usize,
    pub solver: SolverChoice,
    /// `α > −1/(2√n)`, where `e^{−αU}` has finite variance.
    pub alpha_safe: bool,
}

/// Estimate and delta-method SE of a bound from perturbed MAP values.
///
/// `n` is the number of variables of the model. For `Upper` the values are
/// draws of `U`, for `LowerAvg` draws of `L`, for `LowerSubset` draws of the
/// subset-perturbed max.
pub fn bound_from_samples(kind: &BoundKind, values: &[f64], n: usize, alpha: f64) -> (f64, f64) {
    if alpha == 0.0 {
        let mom = Moments::of(values);
        let se = if values.len() > 1 { mom.std_error() } else { f64::INFINITY };
        return (mom.mean, se);
    }
    let nf = n as f64;
    // exponent multiplier k in E[e^{−kU}] and constant term
    let (k, constant) = match kind {
        BoundKind::Upper => (alpha, nf * ln_gamma_ratio(alpha) + nf * EULER_GAMMA),
        BoundKind::LowerAvg => (nf * alpha, EULER_GAMMA + ln_gamma_ratio(alpha)),
        BoundKind::LowerSubset(_) => (alpha, EULER_GAMMA + ln_gamma_ratio(alpha)),
    };
    let ys: Vec<f64> = values.iter().map(|&u| -k * u).collect();
    let lme = log_mean_exp(&ys);
    (constant - lme.value / k, lme.std_error / k.abs())
}

fn alpha_safe(alpha: f64, n: usize) -> bool {
    alpha > -1.0 / (2.0 * (n.max(1) as f64).sqrt())
}

fn perturbation_for(kind: &BoundKind) -> PerturbationKind {
    match kind {
        BoundKind::Upper => PerturbationKind::SumUnary,
        BoundKind::LowerAvg => PerturbationKind::AvgUnary,
        BoundKind::LowerSubset(s) => PerturbationKind::Subset {
            variables: s.clone(),
        },
    }
}

/// Evaluates `kind` at every α in `alphas` from one shared set of `m`
/// draws; draw `i` uses stream `(seed, i)`.
pub fn bound_sweep(
    model: &GraphicalModel,
    kind: &BoundKind,
    alphas: &[f64],
    m: usize,
    solver: SolverChoice,
    seed: u64,
) -> Result<Vec<BoundReport>> {
    if m < 2 {
        return Err(Error::InvalidArgument("bounds need M >= 2".into()));
    }
    for &a in alphas {
        check_alpha(a)?;
    }
    let n = model.variable_count();
    if n == 0 && *kind == BoundKind::LowerAvg {
        return Err(Error::InvalidArgument("average-unary bound needs n >= 1".into()));
    }
    let perturber = Perturber::new(model, perturbation_for(kind), solver)?;
    let values = perturber.values(m, seed, &[]);
    // the flattened subset is a single perturbed variable
    let safe_n = if matches!(kind, BoundKind::LowerSubset(_)) { 1 } else { n };
    Ok(alphas
        .iter()
        .map(|&alpha| {
            let (estimate, std_error) = bound_from_samples(kind, &values, n, alpha);
            BoundReport {
                alpha,
                bound: kind.clone(),
                estimate,
                std_error,
                m,
                solver,
                alpha_safe: alpha_safe(alpha, safe_n),
            }
        })
        .collect())
}

/// `𝒰(α)` from `m` sum-unary draws.
pub fn upper_bound(
    model: &GraphicalModel,
    alpha: f64,
    m: usize,
    solver: SolverChoice,
    seed: u64,
) -> Result<BoundReport> {
    Ok(bound_sweep(model, &BoundKind::Upper, &[alpha], m, solver, seed)?.remove(0))
}

/// `𝒰(α)` over a grid of α with shared noise.
pub fn upper_bound_sweep(
    model: &GraphicalModel,
    alphas: &[f64],
    m: usize,
    solver: SolverChoice,
    seed: u64,
) -> Result<Vec<BoundReport>> {
    bound_sweep(model, &BoundKind::Upper, alphas, m, solver, seed)
}

/// `ℒ(α)` from `m` average-unary draws.
pub fn lower_bound_avg(
    model: &GraphicalModel,
    alpha: f64,
    m: usize,
    solver: SolverChoice,
    seed: u64,
) -> Result<BoundReport> {
    Ok(bound_sweep(model, &BoundKind::LowerAvg, &[alpha], m, solver, seed)?.remove(0))
}

/// Subset lower bound with one Gumbel per joint setting of `subset`.
pub fn lower_bound_subset(
    model: &GraphicalModel,
    subset: &[usize],
    alpha: f64,
    m: usize,
    solver: SolverChoice,
    seed: u64,
) -> Result<BoundReport> {
    let kind = BoundKind::LowerSubset(subset.to_vec());
    Ok(bound_sweep(model, &kind, &[alpha], m, solver, seed)?.remove(0))
}

/// `d𝒰/dα` at 0: `nπ²/12 − var(U)/2`.
pub fn derivative_at_zero(u_samples: &[f64], n: usize) -> Result<f64> {
    if u_samples.len() < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    Ok(n as f64 * PI2_OVER_6 / 2.0 - Moments::of(u_samples).variance / 2.0)
}

/// The derivative at zero next to a central finite difference of `𝒰` on
/// the same samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeComparison {
    pub derivative: f64,
    pub derivative_se: f64,
    /// `(𝒰(h) − 𝒰(−h)) / 2h`
    pub finite_difference: f64,
    pub finite_difference_se: f64,
    /// SE of `derivative − finite_difference`, from the per-sample
    /// influence of each draw on both estimates.
    pub difference_se: f64,
}

pub fn derivative_comparison(u_samples: &[f64], n: usize, h: f64) -> Result<DerivativeComparison> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::InvalidArgument(format!("step must lie in (0, 1), got {h}")));
    }
    let derivative = derivative_at_zero(u_samples, n)?;
    let mf = u_samples.len() as f64;
    let (up, _) = bound_from_samples(&BoundKind::Upper, u_samples, n, h);
    let (down, _) = bound_from_samples(&BoundKind::Upper, u_samples, n, -h);
    let finite_difference = (up - down) / (2.0 * h);

    let mom = Moments::of(u_samples);
    // shift keeps exponentials in range; ratios are shift-invariant
    let shift = mom.mean;
    let a: Vec<f64> = u_samples.iter().map(|u| (-h * (u - shift)).exp()).collect();
    let b: Vec<f64> = u_samples.iter().map(|u| (h * (u - shift)).exp()).collect();
    let ma = a.iter().sum::<f64>() / mf;
    let mb = b.iter().sum::<f64>() / mf;
    let scale = -1.0 / (2.0 * h * h);
    let infl_d: Vec<f64> = u_samples
        .iter()
        .map(|u| -((u - mom.mean).powi(2) - mom.variance) / 2.0)
        .collect();
    let infl_fd: Vec<f64> = a
        .iter()
        .zip(&b)
        .map(|(x, y)| scale * ((x - ma) / ma + (y - mb) / mb))
        .collect();
    let diff: Vec<f64> = infl_d.iter().zip(&infl_fd).map(|(x, y)| x - y).collect();
    let sd = |v: &[f64]| (Moments::of(v).variance / mf).sqrt();
    Ok(DerivativeComparison {
        derivative,
        derivative_se: mom.variance_std_error() / 2.0,
        finite_difference,
        finite_difference_se: sd(&infl_fd),
        difference_se: sd(&diff),
    })
}

/// One α cell of a bound-as-estimator MSE study.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundMseRow {
    pub alpha: f64,
    pub mean: f64,
    pub bias: f64,
    pub variance: f64,
    pub mse: f64,
    /// Standard error of `mse`.
    pub se: f64,
    pub alpha_safe: bool,
}

/// Treats a bound as an estimator of `ln Z`: builds it `k` times from `m`
/// fresh draws and reports bias, variance and MSE against `log_partition`.
///
/// Replicate `r` uses streams `(seed, r, i)`; all α share those draws.
#[allow(clippy::too_many_arguments)]
pub fn bound_mse_sweep(
    model: &GraphicalModel,
    kind: &BoundKind,
    alphas: &[f64],
    m: usize,
    k: usize,
    solver: SolverChoice,
    seed: u64,
    log_partition: f64,
) -> Result<Vec<BoundMseRow>> {
    if m < 2 || k < 2 {
        return Err(Error::InvalidArgument("need M >= 2 and K >= 2".into()));
    }
    for &a in alphas {
        check_alpha(a)?;
    }
    let n = model.variable_count();
    let perturber = Perturber::new(model, perturbation_for(kind), solver)?;
    let estimates: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|r| {
            let values = perturber.values(m, seed, &[r as u64]);
            alphas
                .iter()
                .map(|&a| bound_from_samples(kind, &values, n, a).0)
                .collect()
        })
        .collect();
    let safe_n = if matches!(kind, BoundKind::LowerSubset(_)) { 1 } else { n };
    Ok(alphas
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let ys: Vec<f64> = estimates.iter().map(|e| e[i]).collect();
            let mom = Moments::of(&ys);
            let sq: Vec<f64> = ys.iter().map(|y| (y - log_partition).powi(2)).collect();
            let sq_mom = Moments::of(&sq);
            BoundMseRow {
                alpha,
                mean: mom.mean,
                bias: mom.mean - log_partition,
                variance: mom.variance,
                mse: sq_mom.mean,
                se: sq_mom.std_error(),
                alpha_safe: alpha_safe(alpha, safe_n),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::summarize;
    use crate::model::{spin_glass_grid, Coupling, Factor};

    #[test]
    fn alpha_zero_is_sample_mean() {
        let v = [1.0, 2.0, 4.0];
        let (e, _) = bound_from_samples(&BoundKind::Upper, &v, 3, 0.0);
        assert!((e - 7.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn continuous_in_alpha() {
        let v: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        for kind in [BoundKind::Upper, BoundKind::LowerAvg, BoundKind::LowerSubset(vec![0])] {
            let (e0, _) = bound_from_samples(&kind, &v, 4, 0.0);
            let (ep, _) = bound_from_samples(&kind, &v, 4, 1e-7);
            let (em, _) = bound_from_samples(&kind, &v, 4, -1e-7);
            assert!((e0 - ep).abs() < 1e-5 && (e0 - em).abs() < 1e-5, "{kind}");
        }
    }

    #[test]
    fn single_variable_upper_is_unbiased() {
        let m = GraphicalModel::new(vec![3], vec![Factor::new(vec![0], vec![0.2, -1.0, 0.9])]).unwrap();
        let ln_z = summarize(&m).unwrap().log_partition;
        let reports =
            upper_bound_sweep(&m, &[-0.3, 0.0, 0.5, 1.0, 2.0], 100_000, SolverChoice::Exhaustive, 5)
                .unwrap();
        for r in reports {
            assert!((r.estimate - ln_z).abs() < 4.0 * r.std_error, "{r:?}");
        }
        let lo = lower_bound_avg(&m, 0.5, 1000, SolverChoice::Exhaustive, 5).unwrap();
        let up = upper_bound(&m, 0.5, 1000, SolverChoice::Exhaustive, 5).unwrap();
        assert!((lo.estimate - up.estimate).abs() < 1e-12);
    }

    #[test]
    fn grid_bounds_bracket_ln_z() {
        let m = spin_glass_grid(3, 3, 1.0, Coupling::Mixed, 21).unwrap();
        let ln_z = summarize(&m).unwrap().log_partition;
        for r in upper_bound_sweep(&m, &[-0.04, 0.0, 0.5, 1.0], 10_000, SolverChoice::Exhaustive, 1)
            .unwrap()
        {
            assert!(r.estimate >= ln_z - 3.0 * r.std_error, "{r:?}");
            assert!(r.alpha_safe || r.alpha < 0.0);
        }
        let lo = lower_bound_avg(&m, 0.0, 10_000, SolverChoice::Exhaustive, 2).unwrap();
        assert!(lo.estimate <= ln_z + 3.0 * lo.std_error);
        let sub = lower_bound_subset(&m, &[0, 1], 0.5, 10_000, SolverChoice::Exhaustive, 3).unwrap();
        assert!(sub.estimate <= ln_z + 3.0 * sub.std_error);
        assert!(!sub.alpha_safe || sub.alpha > -0.5);
    }

    #[test]
    fn derivative_rejects_tiny_input() {
        assert!(derivative_at_zero(&[1.0], 1).is_err());
        assert!(derivative_comparison(&[1.0, 2.0], 1, 0.0).is_err());
    }

    #[test]
    fn mse_sweep_shares_noise_across_alpha() {
        let m = spin_glass_grid(2, 2, 1.0, Coupling::Mixed, 1).unwrap();
        let ln_z = summarize(&m).unwrap().log_partition;
        let a = bound_mse_sweep(&m, &BoundKind::Upper, &[0.0, 0.5], 20, 10, SolverChoice::Exhaustive, 4, ln_z)
            .unwrap();
        let b = bound_mse_sweep(&m, &BoundKind::Upper, &[0.5], 20, 10, SolverChoice::Exhaustive, 4, ln_z)
            .unwrap();
        assert_eq!(a[1], b[0]);
        assert!((a[0].mse - (a[0].bias.powi(2) + a[0].variance * 9.0 / 10.0)).abs() < 1e-12);
    }
}
