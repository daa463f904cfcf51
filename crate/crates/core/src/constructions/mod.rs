//! Shattering instances for `x ↦ f(W x)` and their exhaustive verifier.
//!
//! Three instances are provided:
//!
//! - [`zero_init_instance`]: random well-separated images `W_y x_i` with
//!   `W₀ = 0`, and a McShane witness in the Euclidean metric.
//! - [`nonzero_init_instance`]: a deterministic instance with
//!   `W₀ = 2ε[I | 0]` where each labeling moves one unit entry, and a McShane
//!   witness in the ℓ∞ metric.
//! - [`convex_instance`]: the same geometry with `W₀ = 4ε[I | 0]` and a
//!   max-affine (convex) witness.
//!
//! Labelings are bitmasks: bit `i` of `y` set means point `i` must map to
//! `s + ε`, clear means `s − ε`.

mod explicit;
mod manifest;
mod separated;
mod verify;

pub use explicit::{convex_instance, nonzero_init_instance, DEFAULT_KAPPA};
pub use manifest::{ConstructionParams, InstanceManifest};
pub use separated::{
    random_separated_family, zero_init_instance, zero_init_instance_with, SeparatedFamily, DEFAULT_MAX_RESAMPLES,
    SEPARATION_TARGET,
};
pub use verify::{verify_shattering, ShatterFailure, VerifyReport, MAX_FAILURES_LISTED};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lipschitz::{Witness, WitnessFn};
use crate::numerics::{Mat, SparseVec, VectorMetric};

/// Largest `m` any construction accepts.
pub const MAX_CONSTRUCTION_M: usize = 16;
/// Largest `m` for operations that enumerate all `2^m` labelings.
pub const MAX_ENUMERATION_M: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InstanceKind {
    #[serde(rename = "zero-init")]
    ZeroInit,
    #[serde(rename = "nonzero-init")]
    NonzeroInit,
    #[serde(rename = "convex")]
    Convex,
}

impl InstanceKind {
    pub fn name(self) -> &'static str {
        match self {
            InstanceKind::ZeroInit => "zero-init",
            InstanceKind::NonzeroInit => "nonzero-init",
            InstanceKind::Convex => "convex",
        }
    }
}

impl std::str::FromStr for InstanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero-init" => Ok(InstanceKind::ZeroInit),
            "nonzero-init" => Ok(InstanceKind::NonzeroInit),
            "convex" => Ok(InstanceKind::Convex),
            other => Err(invalid(format!(
                "unknown instance kind {other:?} (expected zero-init, nonzero-init or convex)"
            ))),
        }
    }
}

/// How the witness matrix of each labeling is obtained.
#[derive(Clone, Debug)]
pub enum WitnessMatrices {
    /// One dense matrix per labeling.
    Explicit(Vec<Mat>),
    /// `W_y = W₀ + value · e_{row_base + y} e_colᵀ`.
    UnitOffset { row_base: usize, col: usize, value: f64 },
}

/// Statistics of the random family behind a zero-init instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyStats {
    /// Minimum pairwise distance of the unscaled images.
    pub separation: f64,
    pub meets_target: bool,
    pub attempts: usize,
    /// Slope the witness actually uses.
    pub witness_lipschitz: f64,
}

/// `m` points, one witness matrix per labeling, and the outer function `f`.
#[derive(Clone, Debug)]
pub struct ShatterInstance {
    pub kind: InstanceKind,
    pub m: usize,
    pub margin: f64,
    pub threshold: f64,
    /// Points in `ℝ^d`.
    pub points: Vec<SparseVec>,
    pub witnesses: WitnessMatrices,
    w0: Mat,
    w0_cols: Vec<SparseVec>,
    /// Declared spectral norm of `W₀`.
    pub w0_norm: f64,
    /// Frobenius radius `B` around `W₀`.
    pub radius: f64,
    /// Bound `b_x` on the point norms.
    pub domain_radius: f64,
    pub metric: VectorMetric,
    pub witness: Arc<WitnessFn>,
    /// Product of all rescalings applied so far.
    pub scale: f64,
    pub family: Option<FamilyStats>,
}

impl ShatterInstance {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        kind: InstanceKind,
        margin: f64,
        points: Vec<SparseVec>,
        witnesses: WitnessMatrices,
        w0: Mat,
        w0_norm: f64,
        radius: f64,
        domain_radius: f64,
        metric: VectorMetric,
        witness: WitnessFn,
    ) -> Self {
        let w0_cols = columns(&w0);
        ShatterInstance {
            kind,
            m: points.len(),
            margin,
            threshold: 0.0,
            points,
            witnesses,
            w0,
            w0_cols,
            w0_norm,
            radius,
            domain_radius,
            metric,
            witness: Arc::new(witness),
            scale: 1.0,
            family: None,
        }
    }

    pub fn w0(&self) -> &Mat {
        &self.w0
    }

    /// Replaces `W₀`, keeping the declared norm untouched.
    pub fn set_w0(&mut self, w0: Mat) -> Result<()> {
        if w0.shape() != self.w0.shape() {
            return Err(invalid("replacement W0 has a different shape"));
        }
        self.w0_cols = columns(&w0);
        self.w0 = w0;
        Ok(())
    }

    /// Input dimension `d`.
    pub fn d(&self) -> usize {
        self.w0.cols()
    }

    /// Output dimension `n`.
    pub fn n(&self) -> usize {
        self.w0.rows()
    }

    pub fn labelings(&self) -> usize {
        1usize << self.m
    }

    /// `W_y x_i` as a sparse vector.
    pub fn image(&self, y: usize, i: usize) -> SparseVec {
        let x = &self.points[i];
        match &self.witnesses {
            WitnessMatrices::Explicit(ws) => {
                SparseVec::from_dense(&ws[y].matvec_unchecked(&x.to_dense()))
            }
            WitnessMatrices::UnitOffset { row_base, col, value } => {
                let mut pairs: Vec<(usize, f64)> = Vec::new();
                for (j, xj) in x.idx.iter().zip(&x.val) {
                    let c = &self.w0_cols[*j as usize];
                    pairs.extend(c.idx.iter().zip(&c.val).map(|(r, w)| (*r as usize, w * xj)));
                }
                if let Ok(k) = x.idx.binary_search(&(*col as u32)) {
                    pairs.push((row_base + y, value * x.val[k]));
                }
                let v = SparseVec::from_pairs(self.n(), pairs).expect("image indices in range");
                // Entries that cancelled exactly are dropped.
                let (idx, val) =
                    v.idx.iter().zip(&v.val).filter(|(_, a)| **a != 0.0).map(|(i, a)| (*i, *a)).unzip();
                SparseVec { dim: v.dim, idx, val }
            }
        }
    }

    /// `f(W_y x_i)`.
    pub fn output(&self, y: usize, i: usize) -> f64 {
        self.witness.eval_sparse(self.image(y, i).view())
    }

    /// Dense `W_y`.
    pub fn witness_matrix(&self, y: usize) -> Mat {
        match &self.witnesses {
            WitnessMatrices::Explicit(ws) => ws[y].clone(),
            WitnessMatrices::UnitOffset { row_base, col, value } => {
                let mut w = self.w0.clone();
                let r = row_base + y;
                w.set(r, *col, w.get(r, *col) + value);
                w
            }
        }
    }

    /// `‖W_y − W₀‖_F`.
    pub fn offset_norm(&self, y: usize) -> f64 {
        match &self.witnesses {
            WitnessMatrices::Explicit(ws) => ws[y].frobenius_distance(&self.w0).unwrap_or(f64::NAN),
            WitnessMatrices::UnitOffset { value, .. } => value.abs(),
        }
    }

    /// Converts implicit witnesses to explicit dense matrices.
    pub fn materialize(&self) -> Result<ShatterInstance> {
        if self.m > MAX_ENUMERATION_M {
            return Err(Error::CapacityExceeded(format!(
                "materializing 2^{} witness matrices",
                self.m
            )));
        }
        let ws = (0..self.labelings()).map(|y| self.witness_matrix(y)).collect();
        let mut out = self.clone();
        out.witnesses = WitnessMatrices::Explicit(ws);
        Ok(out)
    }

    /// Points as dense vectors.
    pub fn dense_points(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(SparseVec::to_dense).collect()
    }

    /// `f(W_y x_i)` for every labeling and point: row `y`, column `i`.
    pub fn output_table(&self) -> Result<Vec<Vec<f64>>> {
        use rayon::prelude::*;
        if self.m > MAX_ENUMERATION_M {
            return Err(Error::CapacityExceeded(format!(
                "output table over 2^{} labelings (limit m = {MAX_ENUMERATION_M})",
                self.m
            )));
        }
        Ok((0..self.labelings())
            .into_par_iter()
            .map(|y| (0..self.m).map(|i| self.output(y, i)).collect())
            .collect())
    }

    /// Same functions on points scaled down by `bx`, with every matrix scaled up by `bx`.
    pub fn rescale_domain(&self, bx: f64) -> Result<ShatterInstance> {
        if !(bx > 0.0) || !bx.is_finite() {
            return Err(invalid(format!("rescaling factor must be positive, got {bx}")));
        }
        if bx == 1.0 {
            return Ok(self.clone());
        }
        let mut out = self.clone();
        out.points = self.points.iter().map(|p| p.scaled(1.0 / bx)).collect();
        out.set_w0(self.w0.scaled(bx))?;
        out.witnesses = match &self.witnesses {
            WitnessMatrices::Explicit(ws) => {
                WitnessMatrices::Explicit(ws.iter().map(|w| w.scaled(bx)).collect())
            }
            WitnessMatrices::UnitOffset { row_base, col, value } => {
                WitnessMatrices::UnitOffset { row_base: *row_base, col: *col, value: value * bx }
            }
        };
        out.w0_norm = self.w0_norm * bx;
        out.radius = self.radius * bx;
        out.domain_radius = self.domain_radius / bx;
        out.scale = self.scale * bx;
        Ok(out)
    }

    /// Rescales so that the points lie in the unit ball.
    pub fn rescaled(&self) -> Result<ShatterInstance> {
        self.rescale_domain(self.domain_radius)
    }
}

fn columns(w: &Mat) -> Vec<SparseVec> {
    (0..w.cols())
        .map(|j| {
            let col: Vec<f64> = (0..w.rows()).map(|r| w.get(r, j)).collect();
            SparseVec::from_dense(&col)
        })
        .collect()
}

pub(crate) fn check_m(m: usize, cap: usize) -> Result<()> {
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    if m > cap {
        return Err(Error::CapacityExceeded(format!("m = {m} exceeds the limit of {cap}")));
    }
    Ok(())
}

/// Stand-in used while the images that define the real witness are computed.
pub(crate) fn placeholder_witness(n: usize) -> WitnessFn {
    let empty = crate::numerics::SparseRows::new(n);
    WitnessFn::MaxAffine(crate::lipschitz::MaxAffine::new(empty, vec![], 0.0, 0.0).expect("empty max-affine"))
}
