//! The deterministic instances with nonzero reference matrix.

use super::{check_m, placeholder_witness, InstanceKind, ShatterInstance, WitnessMatrices, MAX_CONSTRUCTION_M};
use crate::error::{invalid, Result};
use crate::lipschitz::{AnchoredLipschitz, MaxAffine, WitnessFn};
use crate::numerics::{Mat, SparseRows, SparseVec, SparseView, VectorMetric};

/// Constant piece of the convex witness.
pub const DEFAULT_KAPPA: f64 = 0.5;

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(invalid(format!("eps must lie in (0, 0.5], got {eps}")));
    }
    Ok(())
}

/// Points `x_i = e_i + e_m` in `ℝ^{m+1}` and `W₀ = scale·[I_m | 0]` in `ℝ^{(2^m+m)×(m+1)}`.
fn geometry(m: usize, w0_scale: f64) -> (Vec<SparseVec>, Mat) {
    let d = m + 1;
    let n = (1usize << m) + m;
    let points = (0..m)
        .map(|i| SparseVec { dim: d, idx: vec![i as u32, m as u32], val: vec![1.0, 1.0] })
        .collect();
    let mut w0 = Mat::zeros(n, d);
    for i in 0..m {
        w0.set(i, i, w0_scale);
    }
    (points, w0)
}

/// Instance with `W₀ = 2ε[I | 0]` whose witnesses differ from `W₀` in a single
/// unit entry, so `W_y x_i = 2ε e_i + e_{m+y}`.
///
/// The witness is the McShane extension in ℓ∞ of `±ε` over all `m·2^m`
/// images, which are pairwise at least `2ε` apart, giving slope 1.
/// Points have norm `√2`; see [`ShatterInstance::rescaled`].
pub fn nonzero_init_instance(m: usize, eps: f64) -> Result<ShatterInstance> {
    check_m(m, MAX_CONSTRUCTION_M)?;
    check_eps(eps)?;
    let (points, w0) = geometry(m, 2.0 * eps);
    let witnesses = WitnessMatrices::UnitOffset { row_base: m, col: m, value: 1.0 };
    let placeholder = placeholder_witness(w0.rows());
    let mut inst = ShatterInstance::assemble(
        InstanceKind::NonzeroInit,
        eps,
        points,
        witnesses,
        w0,
        2.0 * eps,
        1.0,
        2f64.sqrt(),
        VectorMetric::Infinity,
        placeholder,
    );

    let mut anchors = SparseRows::new(inst.n());
    let mut values = Vec::with_capacity(m << m);
    for y in 0..inst.labelings() {
        for i in 0..m {
            anchors.push(inst.image(y, i).view())?;
            values.push(if y >> i & 1 == 1 { eps } else { -eps });
        }
    }
    let f = AnchoredLipschitz::mcshane_extend(anchors, values, 1.0, VectorMetric::Infinity)?;
    inst.witness = std::sync::Arc::new(WitnessFn::McShane(f));
    Ok(inst)
}

/// Instance with `W₀ = 4ε[I | 0]` and the convex witness
/// `f(z) = max(max_{j, y: y_j = 1} ⟨½e_j + ½e_{m+y}, z⟩, κ) − (½ + ε)`.
///
/// Outputs are exactly `±ε` when `ε ≤ 1/4` and `κ = ½`.
pub fn convex_instance(m: usize, eps: f64, kappa: f64) -> Result<ShatterInstance> {
    check_m(m, MAX_CONSTRUCTION_M)?;
    check_eps(eps)?;
    if !kappa.is_finite() {
        return Err(invalid("kappa must be finite"));
    }
    let (points, w0) = geometry(m, 4.0 * eps);
    let n = w0.rows();
    let mut pieces = SparseRows::new(n);
    for j in 0..m {
        for y in (0..1usize << m).filter(|y| y >> j & 1 == 1) {
            let idx = [j as u32, (m + y) as u32];
            pieces.push(SparseView { idx: &idx, val: &[0.5, 0.5] })?;
        }
    }
    let offsets = vec![0.0; pieces.len()];
    let f = MaxAffine::new(pieces, offsets, kappa, -(0.5 + eps))?;
    Ok(ShatterInstance::assemble(
        InstanceKind::Convex,
        eps,
        points,
        WitnessMatrices::UnitOffset { row_base: m, col: m, value: 1.0 },
        w0,
        4.0 * eps,
        1.0,
        2f64.sqrt(),
        VectorMetric::Infinity,
        WitnessFn::MaxAffine(f),
    ))
}
