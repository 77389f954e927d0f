//! Binary spin-glass grids.

use super::{Factor, GraphicalModel};
use crate::error::{Error, Result};
use crate::rng;
use rand::Rng;

/// Sign pattern of the pairwise couplings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// θ_ij ~ U[0, C]
    Attractive,
    /// θ_ij ~ U[−C, C]
    Mixed,
}

impl std::str::FromStr for Coupling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "attractive" => Ok(Coupling::Attractive),
            "mixed" => Ok(Coupling::Mixed),
            other => Err(Error::InvalidArgument(format!("unknown coupling mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for Coupling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Coupling::Attractive => "attractive",
            Coupling::Mixed => "mixed",
        })
    }
}

/// A `rows × cols` Ising grid with energy `Σ θ_i s_i + Σ θ_ij s_i s_j`,
/// spins `s = 2x − 1 ∈ {−1, +1}`.
///
/// Node `(r, c)` is variable `r·cols + c`. Parameters come from
/// `rng::stream(seed, &[])`, each as `lo + (hi − lo)·u` with `u` the next
/// `f64` in `[0, 1)`: first θ_i ~ U[−1, 1] for every node in variable order,
/// then θ_ij for each node in variable order, right edge before down edge.
/// Factors are laid out in the same order: unaries, then pairwise.
pub fn spin_glass_grid(
    rows: usize,
    cols: usize,
    coupling_strength: f64,
    mode: Coupling,
    seed: u64,
) -> Result<GraphicalModel> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("grid dimensions must be positive".into()));
    }
    if !(coupling_strength >= 0.0 && coupling_strength.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "coupling strength must be finite and non-negative, got {coupling_strength}"
        )));
    }
    let n = rows * cols;
    let mut rng = rng::stream(seed, &[]);
    let mut draw = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();

    let mut factors = Vec::with_capacity(3 * n);
    for v in 0..n {
        let theta = draw(-1.0, 1.0);
        factors.push(Factor::new(vec![v], vec![-theta, theta]));
    }
    let (lo, hi) = match mode {
        Coupling::Attractive => (0.0, coupling_strength),
        Coupling::Mixed => (-coupling_strength, coupling_strength),
    };
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            let mut neighbours = Vec::with_capacity(2);
            if c + 1 < cols {
                neighbours.push(v + 1);
            }
            if r + 1 < rows {
                neighbours.push(v + cols);
            }
            for w in neighbours {
                let theta = draw(lo, hi);
                factors.push(Factor::new(vec![v, w], vec![theta, -theta, -theta, theta]));
            }
        }
    }
    GraphicalModel::new(vec![2; n], factors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        let m = spin_glass_grid(1, 1, 1.0, Coupling::Attractive, 7).unwrap();
        assert_eq!(m.variable_count(), 1);
        assert_eq!(m.factors().len(), 1);
        let m = spin_glass_grid(2, 2, 1.0, Coupling::Mixed, 7).unwrap();
        assert_eq!(m.variable_count(), 4);
        assert_eq!(m.factors().iter().filter(|f| f.scope().len() == 1).count(), 4);
        assert_eq!(m.factors().iter().filter(|f| f.scope().len() == 2).count(), 4);
        let m = spin_glass_grid(3, 4, 1.0, Coupling::Mixed, 7).unwrap();
        assert_eq!(m.factors().len(), 12 + 17);
    }

    #[test]
    fn deterministic() {
        let a = spin_glass_grid(3, 3, 2.0, Coupling::Mixed, 5).unwrap();
        let b = spin_glass_grid(3, 3, 2.0, Coupling::Mixed, 5).unwrap();
        let c = spin_glass_grid(3, 3, 2.0, Coupling::Mixed, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_empty_grid() {
        assert!(spin_glass_grid(0, 3, 1.0, Coupling::Mixed, 1).is_err());
        assert!(spin_glass_grid(2, 2, -1.0, Coupling::Mixed, 1).is_err());
    }
}
