use serde::{Deserialize, Serialize};

use super::Estimate;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub lattice_size_nm: f64,
    pub estimate: Estimate,
    /// |estimate(next size) - estimate(this size)|; absent at the last point.
    pub residual: Option<f64>,
}

/// Evaluates `estimator` on each box size and reports successive residuals.
pub fn convergence_sweep<F>(grid: &[f64], estimator: F) -> Result<Vec<ConvergencePoint>>
where
    F: Fn(f64) -> Result<Estimate>,
{
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("lattice size grid must be strictly increasing"));
    }
    let est: Vec<Estimate> = grid.iter().map(|&l| estimator(l)).collect::<Result<_>>()?;
    Ok(grid
        .iter()
        .enumerate()
        .map(|(i, &l)| ConvergencePoint {
            lattice_size_nm: l,
            estimate: est[i],
            residual: est.get(i + 1).map(|n| (n.value - est[i].value).abs()),
        })
        .collect())
}

/// Residual series only.
pub fn residuals(points: &[ConvergencePoint]) -> Vec<f64> {
    points.iter().filter_map(|p| p.residual).collect()
}
