//! Discrete graphical models with log-space factor tables.

mod grid;
mod uai;

pub use grid::{spin_glass_grid, Coupling};
pub use uai::{load_uai, save_uai};

use crate::error::{Error, Result};

/// A full assignment of states to variables, `x[i] ∈ {0, …, |𝒳_i| − 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration(pub Vec<usize>);

impl Configuration {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for Configuration {
    type Output = usize;
    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}

impl std::fmt::Display for Configuration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// A log-potential table over an ordered scope, row-major with the last
/// scope variable varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    scope: Vec<usize>,
    log_table: Vec<f64>,
}

impl Factor {
    pub fn new(scope: Vec<usize>, log_table: Vec<f64>) -> Self {
        Factor { scope, log_table }
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn log_table(&self) -> &[f64] {
        &self.log_table
    }

    /// Table position of the scope's projection of `x`.
    #[inline]
    pub fn entry_index(&self, x: &[usize], cardinalities: &[usize]) -> usize {
        let mut idx = 0;
        for &v in &self.scope {
            idx = idx * cardinalities[v] + x[v];
        }
        idx
    }

    #[inline]
    pub fn value(&self, x: &[usize], cardinalities: &[usize]) -> f64 {
        self.log_table[self.entry_index(x, cardinalities)]
    }
}

/// A discrete model `p̃(x) = exp(Σ_f φ_f(x_f))` over `𝒳 = 𝒳_1 × ⋯ × 𝒳_n`.
///
/// Immutable once constructed. A model with zero variables has exactly one
/// (empty) configuration; such models only arise from clamping every variable.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphicalModel {
    cardinalities: Vec<usize>,
    factors: Vec<Factor>,
}

/// Result of fixing a leading block of variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ClampedModel {
    /// Model over the unfixed variables, re-indexed from zero.
    pub model: GraphicalModel,
    /// Sum of the factors that were fully covered by the prefix.
    pub constant: f64,
}

impl GraphicalModel {
    pub fn new(cardinalities: Vec<usize>, factors: Vec<Factor>) -> Result<Self> {
        if let Some(i) = cardinalities.iter().position(|&c| c == 0) {
            return Err(Error::InvalidModel(format!("variable {i} has cardinality 0")));
        }
        let n = cardinalities.len();
        for (fi, f) in factors.iter().enumerate() {
            if f.scope.is_empty() {
                return Err(Error::InvalidModel(format!("factor {fi} has an empty scope")));
            }
            let mut seen = vec![false; n];
            let mut expected = 1usize;
            for &v in &f.scope {
                if v >= n {
                    return Err(Error::ScopeOutOfRange {
                        index: v,
                        variables: n,
                    });
                }
                if seen[v] {
                    return Err(Error::InvalidModel(format!(
                        "factor {fi} lists variable {v} twice"
                    )));
                }
                seen[v] = true;
                expected = expected.checked_mul(cardinalities[v]).ok_or_else(|| {
                    Error::InvalidModel(format!("factor {fi} table size overflows"))
                })?;
            }
            if f.log_table.len() != expected {
                return Err(Error::TableLength {
                    factor: fi,
                    expected,
                    found: f.log_table.len(),
                });
            }
            if let Some(&bad) = f
                .log_table
                .iter()
                .find(|v| v.is_nan() || **v == f64::INFINITY)
            {
                return Err(Error::InvalidModel(format!(
                    "factor {fi} has log-potential entry {bad}"
                )));
            }
        }
        Ok(GraphicalModel {
            cardinalities,
            factors,
        })
    }

    pub fn variable_count(&self) -> usize {
        self.cardinalities.len()
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// |𝒳| as an exact integer.
    pub fn configuration_count(&self) -> u128 {
        self.cardinalities
            .iter()
            .fold(1u128, |acc, &c| acc.saturating_mul(c as u128))
    }

    /// Checks that the configuration space fits under `cap`; returns its size.
    pub fn enumerable(&self, cap: usize) -> Result<usize> {
        let size = self.configuration_count();
        if size > cap as u128 {
            return Err(Error::EnumerationCap { size, cap });
        }
        Ok(size as usize)
    }

    pub fn check_configuration(&self, x: &[usize]) -> Result<()> {
        if x.len() != self.variable_count() {
            return Err(Error::InvalidArgument(format!(
                "configuration has {} entries, model has {} variables",
                x.len(),
                self.variable_count()
            )));
        }
        for (i, (&s, &c)) in x.iter().zip(&self.cardinalities).enumerate() {
            if s >= c {
                return Err(Error::InvalidArgument(format!(
                    "state {s} of variable {i} is out of range (cardinality {c})"
                )));
            }
        }
        Ok(())
    }

    /// φ(x): the sum of all factor log-values at `x`.
    pub fn potential(&self, x: &[usize]) -> f64 {
        debug_assert_eq!(x.len(), self.variable_count());
        self.factors
            .iter()
            .map(|f| f.value(x, &self.cardinalities))
            .sum()
    }

    /// Lexicographic rank of `x` (first variable most significant).
    pub fn index_of(&self, x: &[usize]) -> usize {
        let mut idx = 0;
        for (&s, &c) in x.iter().zip(&self.cardinalities) {
            idx = idx * c + s;
        }
        idx
    }

    /// Inverse of [`GraphicalModel::index_of`].
    pub fn configuration_at(&self, mut index: usize) -> Configuration {
        let mut x = vec![0; self.variable_count()];
        for i in (0..x.len()).rev() {
            let c = self.cardinalities[i];
            x[i] = index % c;
            index /= c;
        }
        Configuration(x)
    }

    /// φ for every configuration, in lexicographic order.
    pub fn potential_table(&self, cap: usize) -> Result<Vec<f64>> {
        let size = self.enumerable(cap)?;
        let n = self.variable_count();
        // per-factor stride of each variable in the factor's table
        let strides: Vec<Vec<(usize, usize)>> = self
            .factors
            .iter()
            .map(|f| {
                let mut s = 1;
                let mut out = vec![(0, 0); f.scope.len()];
                for (k, &v) in f.scope.iter().enumerate().rev() {
                    out[k] = (v, s);
                    s *= self.cardinalities[v];
                }
                out
            })
            .collect();
        let mut table = Vec::with_capacity(size);
        let mut x = vec![0usize; n];
        let mut entry: Vec<usize> = vec![0; self.factors.len()];
        // variable -> list of (factor, stride)
        let mut touches: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (fi, s) in strides.iter().enumerate() {
            for &(v, st) in s {
                touches[v].push((fi, st));
            }
        }
        for _ in 0..size {
            let phi: f64 = self
                .factors
                .iter()
                .zip(&entry)
                .map(|(f, &e)| f.log_table[e])
                .sum();
            table.push(phi);
            // odometer increment, last variable fastest
            for i in (0..n).rev() {
                if x[i] + 1 < self.cardinalities[i] {
                    x[i] += 1;
                    for &(fi, st) in &touches[i] {
                        entry[fi] += st;
                    }
                    break;
                }
                for &(fi, st) in &touches[i] {
                    entry[fi] -= st * x[i];
                }
                x[i] = 0;
            }
        }
        Ok(table)
    }

    /// Fixes variables `0..prefix.len()` to the given states.
    ///
    /// Factors entirely inside the prefix are summed into
    /// [`ClampedModel::constant`]; the rest are restricted and re-indexed so
    /// that `potential(x) = clamped.model.potential(suffix) + clamped.constant`.
    pub fn clamp(&self, prefix: &[usize]) -> Result<ClampedModel> {
        let k = prefix.len();
        let n = self.variable_count();
        if k > n {
            return Err(Error::InvalidArgument(format!(
                "prefix of length {k} for a model with {n} variables"
            )));
        }
        for (i, &s) in prefix.iter().enumerate() {
            if s >= self.cardinalities[i] {
                return Err(Error::InvalidArgument(format!(
                    "prefix value {s} out of range for variable {i} (cardinality {})",
                    self.cardinalities[i]
                )));
            }
        }
        let mut constant = 0.0;
        let mut factors = Vec::new();
        let mut full = vec![0usize; n];
        full[..k].copy_from_slice(prefix);
        for f in &self.factors {
            let free: Vec<usize> = f.scope.iter().copied().filter(|&v| v >= k).collect();
            if free.is_empty() {
                constant += f.value(&full, &self.cardinalities);
                continue;
            }
            let size: usize = free.iter().map(|&v| self.cardinalities[v]).product();
            let mut table = Vec::with_capacity(size);
            let mut x = full.clone();
            for mut r in 0..size {
                for &v in free.iter().rev() {
                    let c = self.cardinalities[v];
                    x[v] = r % c;
                    r /= c;
                }
                table.push(f.value(&x, &self.cardinalities));
            }
            factors.push(Factor::new(free.iter().map(|v| v - k).collect(), table));
        }
        let model = GraphicalModel::new(self.cardinalities[k..].to_vec(), factors)?;
        Ok(ClampedModel { model, constant })
    }

    /// Replaces the variables in `subset` by one joint variable placed first.
    ///
    /// The joint variable's states enumerate the subset's assignments
    /// lexicographically in increasing variable order; remaining variables
    /// keep their relative order. Potentials are unchanged.
    pub fn merge_variables(&self, subset: &[usize], cap: usize) -> Result<GraphicalModel> {
        let n = self.variable_count();
        let mut members: Vec<usize> = subset.to_vec();
        members.sort_unstable();
        members.dedup();
        if members.is_empty() || members.len() != subset.len() {
            return Err(Error::InvalidArgument(
                "subset must be non-empty and duplicate-free".into(),
            ));
        }
        if let Some(&v) = members.iter().find(|&&v| v >= n) {
            return Err(Error::ScopeOutOfRange {
                index: v,
                variables: n,
            });
        }
        let joint_card = members
            .iter()
            .fold(1u128, |a, &v| a.saturating_mul(self.cardinalities[v] as u128));
        if joint_card > cap as u128 {
            return Err(Error::EnumerationCap {
                size: joint_card,
                cap,
            });
        }
        let joint_card = joint_card as usize;
        let in_subset: Vec<bool> = (0..n).map(|v| members.binary_search(&v).is_ok()).collect();
        let mut new_index = vec![usize::MAX; n];
        let mut next = 1;
        for v in 0..n {
            if !in_subset[v] {
                new_index[v] = next;
                next += 1;
            }
        }
        let mut cards = vec![joint_card];
        cards.extend((0..n).filter(|&v| !in_subset[v]).map(|v| self.cardinalities[v]));

        let mut x = vec![0usize; n];
        let mut factors = Vec::with_capacity(self.factors.len());
        for f in &self.factors {
            let touches_subset = f.scope.iter().any(|&v| in_subset[v]);
            let rest: Vec<usize> = f.scope.iter().copied().filter(|&v| !in_subset[v]).collect();
            let mut scope = Vec::with_capacity(rest.len() + 1);
            if touches_subset {
                scope.push(0);
            }
            scope.extend(rest.iter().map(|&v| new_index[v]));
            let size: usize = scope.iter().map(|&v| cards[v]).product();
            let mut table = Vec::with_capacity(size);
            for mut r in 0..size {
                for &v in rest.iter().rev() {
                    let c = self.cardinalities[v];
                    x[v] = r % c;
                    r /= c;
                }
                if touches_subset {
                    let mut j = r;
                    for &v in members.iter().rev() {
                        let c = self.cardinalities[v];
                        x[v] = j % c;
                        j /= c;
                    }
                }
                table.push(f.value(&x, &self.cardinalities));
            }
            factors.push(Factor::new(scope, table));
        }
        GraphicalModel::new(cards, factors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_var() -> GraphicalModel {
        let l2 = 2f64.ln();
        GraphicalModel::new(vec![2, 2], vec![Factor::new(vec![0, 1], vec![l2, 0.0, 0.0, l2])])
            .unwrap()
    }

    #[test]
    fn rejects_bad_factors() {
        let e = GraphicalModel::new(vec![2], vec![Factor::new(vec![3], vec![0.0, 0.0])]);
        assert!(matches!(e, Err(Error::ScopeOutOfRange { index: 3, .. })));
        let e = GraphicalModel::new(vec![2, 2], vec![Factor::new(vec![0, 1], vec![0.0; 3])]);
        assert!(matches!(e, Err(Error::TableLength { expected: 4, .. })));
        let e = GraphicalModel::new(vec![2], vec![Factor::new(vec![0, 0], vec![0.0; 4])]);
        assert!(e.is_err());
        let e = GraphicalModel::new(vec![2], vec![Factor::new(vec![0], vec![f64::INFINITY, 0.0])]);
        assert!(e.is_err());
        let e = GraphicalModel::new(vec![2], vec![Factor::new(vec![], vec![0.0])]);
        assert!(e.is_err());
    }

    #[test]
    fn potential_reads_factor() {
        let m = two_var();
        assert_eq!(m.potential(&[0, 0]), 2f64.ln());
        assert_eq!(m.potential(&[0, 1]), 0.0);
        let zero = GraphicalModel::new(
            vec![3, 2],
            vec![
                Factor::new(vec![0], vec![0.0; 3]),
                Factor::new(vec![1, 0], vec![0.0; 6]),
            ],
        )
        .unwrap();
        assert_eq!(zero.potential(&[2, 1]), 0.0);
    }

    #[test]
    fn potential_table_matches_pointwise() {
        let m = GraphicalModel::new(
            vec![2, 3, 2],
            vec![
                Factor::new(vec![2, 0], vec![0.1, -0.4, 0.7, 1.3]),
                Factor::new(vec![1], vec![0.5, f64::NEG_INFINITY, -2.0]),
                Factor::new(vec![0, 1, 2], (0..12).map(|i| i as f64 * 0.01).collect()),
            ],
        )
        .unwrap();
        let table = m.potential_table(1 << 10).unwrap();
        assert_eq!(table.len(), 12);
        for (i, &v) in table.iter().enumerate() {
            let x = m.configuration_at(i);
            assert_eq!(m.index_of(x.as_slice()), i);
            let p = m.potential(x.as_slice());
            assert!(v == p || (v - p).abs() < 1e-14, "{v} vs {p}");
        }
    }

    #[test]
    fn clamp_examples() {
        let m = two_var();
        let c = m.clamp(&[]).unwrap();
        assert_eq!(c.model, m);
        assert_eq!(c.constant, 0.0);

        let c = m.clamp(&[0]).unwrap();
        assert_eq!(c.model.variable_count(), 1);
        assert_eq!(c.model.potential(&[0]) + c.constant, 2f64.ln());
        assert_eq!(c.model.potential(&[1]) + c.constant, 0.0);

        let c = m.clamp(&[1, 1]).unwrap();
        assert_eq!(c.model.variable_count(), 0);
        assert_eq!(c.constant, 2f64.ln());

        assert!(m.clamp(&[2]).is_err());
    }

    #[test]
    fn merge_preserves_potential() {
        let m = GraphicalModel::new(
            vec![2, 3, 2],
            vec![
                Factor::new(vec![0, 1], (0..6).map(|i| i as f64 * 0.3).collect()),
                Factor::new(vec![2], vec![-1.0, 0.25]),
                Factor::new(vec![1, 2], (0..6).map(|i| (i as f64).sin()).collect()),
            ],
        )
        .unwrap();
        let merged = m.merge_variables(&[2, 0], 64).unwrap();
        assert_eq!(merged.cardinalities(), &[4, 3]);
        for i in 0..12 {
            let x = m.configuration_at(i);
            let joint = x[0] * 2 + x[2];
            let y = [joint, x[1]];
            assert!((m.potential(x.as_slice()) - merged.potential(&y)).abs() < 1e-14);
        }
    }
}
