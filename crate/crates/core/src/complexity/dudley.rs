use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Trapezoid panels per integral.
pub const DUDLEY_PANELS: usize = 1024;
/// Default number of log-spaced candidate lower limits.
pub const DUDLEY_GRID_POINTS: usize = 64;
const DEFAULT_GRID_FLOOR: f64 = 1e-4;

/// Candidate lower limits `ε` for the entropy integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DudleyGrid {
    /// `points` values log-spaced from `floor·LB` to `LB`.
    LogSpaced { points: usize, floor: f64 },
    Explicit(Vec<f64>),
}

impl Default for DudleyGrid {
    fn default() -> Self {
        DudleyGrid::LogSpaced { points: DUDLEY_GRID_POINTS, floor: DEFAULT_GRID_FLOOR }
    }
}

impl DudleyGrid {
    pub fn values(&self, range: f64) -> Result<Vec<f64>> {
        match self {
            DudleyGrid::Explicit(v) => {
                if v.is_empty() {
                    return Err(invalid("Dudley grid is empty"));
                }
                if v.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
                    return Err(invalid("Dudley grid values must be finite and nonnegative"));
                }
                Ok(v.clone())
            }
            DudleyGrid::LogSpaced { points, floor } => {
                if *points == 0 {
                    return Err(invalid("Dudley grid is empty"));
                }
                if !(*floor > 0.0 && *floor <= 1.0) {
                    return Err(invalid(format!("grid floor must lie in (0, 1], got {floor}")));
                }
                if *points == 1 {
                    return Ok(vec![range]);
                }
                let (lo, hi) = ((floor * range).ln(), range.ln());
                Ok((0..*points)
                    .map(|k| (lo + (hi - lo) * k as f64 / (*points - 1) as f64).exp())
                    .collect())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DudleyResult {
    pub value: f64,
    /// Grid value attaining the minimum (first one on ties).
    pub argmin: f64,
    pub panels: usize,
    pub grid_points: usize,
}

/// `min_ε 4ε + (12/√m) ∫_ε^{LB} √(log N(τ)) dτ` over the grid, with the
/// integral by composite trapezoid.
pub fn dudley_bound(
    log_cover: &dyn Fn(f64) -> f64,
    range: f64,
    m: f64,
    grid: &DudleyGrid,
) -> Result<DudleyResult> {
    if !(range > 0.0) || !range.is_finite() {
        return Err(invalid(format!("range bound must be positive, got {range}")));
    }
    if !(m > 0.0) {
        return Err(invalid(format!("sample size must be positive, got {m}")));
    }
    let eps_grid = grid.values(range)?;
    let root = |t: f64| log_cover(t).max(0.0).sqrt();
    let mut best = DudleyResult { value: f64::INFINITY, argmin: f64::NAN, panels: DUDLEY_PANELS, grid_points: eps_grid.len() };
    for &eps in &eps_grid {
        let integral = if eps >= range {
            0.0
        } else {
            let h = (range - eps) / DUDLEY_PANELS as f64;
            let mut acc = 0.5 * (root(eps) + root(range));
            for k in 1..DUDLEY_PANELS {
                acc += root(eps + h * k as f64);
            }
            acc * h
        };
        let value = 4.0 * eps + 12.0 / m.sqrt() * integral;
        if value < best.value || best.argmin.is_nan() {
            best.value = value;
            best.argmin = eps;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_entropy() {
        let grid = DudleyGrid::Explicit(vec![0.3, 0.1, 0.2]);
        let r = dudley_bound(&|_| 0.0, 1.0, 10.0, &grid).unwrap();
        assert!((r.value - 0.4).abs() < 1e-15);
        assert_eq!(r.argmin, 0.1);
    }

    #[test]
    fn unit_entropy_minimized_at_zero() {
        let grid = DudleyGrid::Explicit(vec![0.0, 0.25, 0.5, 1.0]);
        let r = dudley_bound(&|_| 1.0, 1.0, 100.0, &grid).unwrap();
        assert!((r.value - 1.2).abs() < 1e-12);
        assert_eq!(r.argmin, 0.0);
    }

    #[test]
    fn rejects_bad_range() {
        assert!(dudley_bound(&|_| 0.0, 0.0, 1.0, &DudleyGrid::default()).is_err());
        assert!(dudley_bound(&|_| 0.0, 1.0, 1.0, &DudleyGrid::Explicit(vec![])).is_err());
    }
}
