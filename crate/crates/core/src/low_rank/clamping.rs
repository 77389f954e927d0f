//! Clamping: `𝒰` after fixing a leading block of variables.

use super::bounds::{bound_from_samples, BoundKind};
use super::{check_alpha, PerturbationKind, Perturber};
use crate::error::{Error, Result};
use crate::math::log_sum_exp;
use crate::model::GraphicalModel;
use crate::solver::SolverChoice;

/// Both sides of the clamping inequality, in log space:
/// `ln Σ_{x_j} exp 𝒰(prefix, x_j) ≤ 𝒰(prefix)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClampingReport {
    pub alpha: f64,
    /// 1-based index of the variable being clamped.
    pub j: usize,
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub rhs_se: f64,
    pub holds: bool,
}

impl ClampingReport {
    pub fn combined_se(&self) -> f64 {
        self.lhs_se.hypot(self.rhs_se)
    }
}

pub(crate) fn clamped_upper_at(
    model: &GraphicalModel,
    prefix: &[usize],
    alpha: f64,
    m: usize,
    solver: SolverChoice,
    seed: u64,
    path: &[u64],
) -> Result<(f64, f64)> {
    let perturber = Perturber::new(
        model,
        PerturbationKind::Partial {
            prefix: prefix.to_vec(),
        },
        solver,
    )?;
    if perturber.is_deterministic() {
        return Ok((model.potential(prefix), 0.0));
    }
    let free = model.variable_count() - prefix.len();
    let values = perturber.values(m, seed, path);
    Ok(bound_from_samples(&BoundKind::Upper, &values, free, alpha))
}

/// `𝒰(α)` of the model with `prefix` clamped, `ln Z` of the clamped slice
/// included; draw `i` uses stream `(seed, i)`.
pub fn clamped_upper_bound(
    model: &GraphicalModel,
    prefix: &[usize],
    alpha: f64,
    m: usize,
    solver: SolverChoice,
    seed: u64,
) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    clamped_upper_at(model, prefix, alpha, m, solver, seed, &[])
}

/// Estimates both sides of the clamping inequality for variable `j`
/// (1-based) given the values of variables `1..j−1` in `prefix`.
///
/// The right side uses streams `(seed, 0, i)`, the branch `x_j = s` on the
/// left uses `(seed, 1 + s, i)`.
pub fn clamping_check(
    model: &GraphicalModel,
    alpha: f64,
    j: usize,
    prefix: &[usize],
    m: usize,
    solver: SolverChoice,
    seed: u64,
) -> Result<ClampingReport> {
    check_alpha(alpha)?;
    let n = model.variable_count();
    if j == 0 || j > n || prefix.len() != j - 1 {
        return Err(Error::InvalidArgument(format!(
            "clamping variable {j} needs a prefix of length {} in a model with {n} variables",
            j.saturating_sub(1)
        )));
    }
    if m < 2 {
        return Err(Error::InvalidArgument("clamping check needs M >= 2".into()));
    }
    let (rhs, rhs_se) = clamped_upper_at(model, prefix, alpha, m, solver, seed, &[0])?;
    let mut branch = prefix.to_vec();
    branch.push(0);
    let mut terms = Vec::with_capacity(model.cardinalities()[j - 1]);
    for s in 0..model.cardinalities()[j - 1] {
        branch[j - 1] = s;
        terms.push(clamped_upper_at(model, &branch, alpha, m, solver, seed, &[1 + s as u64])?);
    }
    let values: Vec<f64> = terms.iter().map(|t| t.0).collect();
    let lhs = log_sum_exp(&values);
    // d lhs / d term_s is the softmax weight of term s; branches are independent
    let lhs_se = terms
        .iter()
        .map(|&(v, se)| {
            let w = (v - lhs).exp();
            if w > 0.0 {
                (w * se).powi(2)
            } else {
                0.0
            }
        })
        .sum::<f64>()
        .sqrt();
    let combined = lhs_se.hypot(rhs_se);
    Ok(ClampingReport {
        alpha,
        j,
        lhs,
        lhs_se,
        rhs,
        rhs_se,
        holds: lhs <= rhs + 3.0 * combined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{spin_glass_grid, Coupling, Factor};

    #[test]
    fn single_variable_is_an_identity() {
        let m = GraphicalModel::new(vec![3], vec![Factor::new(vec![0], vec![0.5, 0.0, -0.7])]).unwrap();
        let r = clamping_check(&m, 0.5, 1, &[], 100_000, SolverChoice::Exhaustive, 3).unwrap();
        // every branch is fully clamped, so lhs is exactly ln Z
        assert_eq!(r.lhs_se, 0.0);
        assert!((r.lhs - r.rhs).abs() < 4.0 * r.combined_se(), "{r:?}");
        assert!(r.holds);
    }

    #[test]
    fn holds_on_small_grid() {
        let m = spin_glass_grid(2, 2, 1.0, Coupling::Mixed, 4).unwrap();
        for alpha in [-0.25, 0.0, 0.5, 1.0] {
            for (j, prefix) in [(1, vec![]), (2, vec![1]), (4, vec![0, 1, 1])] {
                let r = clamping_check(&m, alpha, j, &prefix, 20_000, SolverChoice::Exhaustive, 9).unwrap();
                assert!(r.holds, "{r:?}");
            }
        }
    }

    #[test]
    fn bad_arguments() {
        let m = spin_glass_grid(2, 2, 1.0, Coupling::Mixed, 4).unwrap();
        assert!(clamping_check(&m, 0.5, 0, &[], 10, SolverChoice::Exhaustive, 0).is_err());
        assert!(clamping_check(&m, 0.5, 2, &[], 10, SolverChoice::Exhaustive, 0).is_err());
        assert!(clamping_check(&m, -1.5, 1, &[], 10, SolverChoice::Exhaustive, 0).is_err());
    }
}
