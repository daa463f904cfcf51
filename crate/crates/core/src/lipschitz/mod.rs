//! Lipschitz witness functions.
//!
//! [`AnchoredLipschitz`] is the min-form McShane extension of finitely many
//! prescribed values; [`MaxAffine`] is a pointwise maximum of affine pieces
//! plus a constant piece. Both are stored by their anchors or pieces and
//! evaluated on demand.

mod anchored;
mod empirical;
mod max_affine;

pub use anchored::{AnchoredLipschitz, MAX_SERIALIZED_ANCHORS};
pub use empirical::{empirical_lipschitz, AnchorSampler, DomainSampler, LipschitzEstimate};
pub use max_affine::MaxAffine;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::{SparseView, VectorMetric};

/// Slope needed to interpolate `values` on points that are pairwise at least
/// `alpha` apart: `(max − min) / alpha`.
///
/// ```
/// assert_eq!(caplab::lipschitz::budget(&[0.0, 1.0, 5.0], 2.0).unwrap(), 2.5);
/// ```
pub fn budget(values: &[f64], alpha: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(invalid("budget needs at least one value"));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(invalid(format!("separation must be positive, got {alpha}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("values must be finite"));
    }
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((hi - lo) / alpha)
}

/// A real-valued function on `ℝ^dim` that can be evaluated at sparse or dense points.
pub trait Witness {
    fn dim(&self) -> usize;

    fn eval_sparse(&self, x: SparseView<'_>) -> f64;

    fn eval(&self, x: &[f64]) -> Result<f64>;
}

/// Either witness representation, tagged by `type` in JSON.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum WitnessFn {
    #[serde(rename = "mcshane")]
    McShane(AnchoredLipschitz),
    #[serde(rename = "max-affine")]
    MaxAffine(MaxAffine),
}

impl WitnessFn {
    pub fn is_convex(&self) -> bool {
        matches!(self, WitnessFn::MaxAffine(_))
    }

    pub fn as_max_affine(&self) -> Option<&MaxAffine> {
        match self {
            WitnessFn::MaxAffine(f) => Some(f),
            WitnessFn::McShane(_) => None,
        }
    }

    pub fn as_mcshane(&self) -> Option<&AnchoredLipschitz> {
        match self {
            WitnessFn::McShane(f) => Some(f),
            WitnessFn::MaxAffine(_) => None,
        }
    }

    /// Short name used in manifests.
    pub fn kind(&self) -> &'static str {
        match self {
            WitnessFn::McShane(_) => "mcshane",
            WitnessFn::MaxAffine(_) => "max-affine",
        }
    }

    /// Lipschitz constant in `metric`, exact for both representations
    /// (for McShane only in the metric it was built with).
    pub fn lipschitz_constant(&self, metric: VectorMetric) -> Option<f64> {
        match self {
            WitnessFn::McShane(f) => (f.metric() == metric).then_some(f.lipschitz()),
            WitnessFn::MaxAffine(f) => Some(f.lipschitz_bound(metric)),
        }
    }

    /// A subgradient at dense `x`.
    pub fn subgradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            WitnessFn::McShane(f) => f.subgradient(x),
            WitnessFn::MaxAffine(f) => {
                crate::error::ensure_dim(f.dim(), x.len())?;
                Ok(f.subgradient(crate::numerics::SparseVec::from_dense(x).view()).to_dense())
            }
        }
    }
}

impl Witness for WitnessFn {
    fn dim(&self) -> usize {
        match self {
            WitnessFn::McShane(f) => f.dim(),
            WitnessFn::MaxAffine(f) => f.dim(),
        }
    }

    fn eval_sparse(&self, x: SparseView<'_>) -> f64 {
        match self {
            WitnessFn::McShane(f) => f.eval_sparse(x),
            WitnessFn::MaxAffine(f) => f.eval_sparse(x),
        }
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            WitnessFn::McShane(f) => f.eval(x),
            WitnessFn::MaxAffine(f) => f.eval(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_examples() {
        let eps = 0.3;
        let l0 = 2.0;
        let b = budget(&[-eps, eps], 2.0 * eps / l0).unwrap();
        assert!((b - l0).abs() < 1e-15);
        assert_eq!(budget(&[1.5; 4], 0.1).unwrap(), 0.0);
        assert!(budget(&[], 1.0).is_err());
        assert!(budget(&[1.0], 0.0).is_err());
    }
}
