//! Random families with well-separated images, and the zero-init instance built on them.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{check_m, placeholder_witness, FamilyStats, InstanceKind, ShatterInstance, WitnessMatrices, MAX_ENUMERATION_M};
use crate::error::{invalid, Error, Result};
use crate::lipschitz::{budget, AnchoredLipschitz, WitnessFn};
use crate::numerics::{Mat, SparseRows, SparseVec, VectorMetric};
use crate::rng;

/// Pairwise distance the family aims for.
pub const SEPARATION_TARGET: f64 = 0.25;
pub const DEFAULT_MAX_RESAMPLES: usize = 16;

/// Unit points `x_1..x_m` and matrices `W_1..W_{2^m}` with `‖W_s‖_F² ≤ 2d`.
#[derive(Clone, Debug)]
pub struct SeparatedFamily {
    pub points: Vec<Vec<f64>>,
    pub matrices: Vec<Mat>,
    /// Minimum of `‖W_s x_i − W_t x_j‖` over `(s, i) ≠ (t, j)`.
    pub separation: f64,
    pub meets_target: bool,
    pub attempts: usize,
}

impl SeparatedFamily {
    pub fn images(&self) -> Vec<Vec<f64>> {
        self.matrices
            .iter()
            .flat_map(|w| self.points.iter().map(move |x| w.matvec_unchecked(x)))
            .collect()
    }
}

/// Draws `x_i` uniformly on the sphere and `W_s` with i.i.d. `N(0, 1/n)`
/// entries, shrinking any `W_s` whose squared Frobenius norm exceeds `2d`.
/// Redraws up to `max_resamples` times until the separation reaches 1/4,
/// keeping the best family seen.
pub fn random_separated_family(
    d: usize,
    m: usize,
    n: usize,
    seed: u64,
    max_resamples: usize,
) -> Result<SeparatedFamily> {
    if d < 20 {
        return Err(invalid(format!("d must be at least 20, got {d}")));
    }
    check_m(m, MAX_ENUMERATION_M)?;
    if n == 0 {
        return Err(invalid("n must be positive"));
    }

    let mut best = draw_family(d, m, n, rng::derive_seed(seed, 0));
    let mut attempts = 1;
    while !best.meets_target && attempts <= max_resamples {
        let fam = draw_family(d, m, n, rng::derive_seed(seed, attempts as u64));
        attempts += 1;
        if fam.separation > best.separation {
            best = fam;
        }
    }
    best.attempts = attempts;
    Ok(best)
}

fn draw_family(d: usize, m: usize, n: usize, seed: u64) -> SeparatedFamily {
    let mut r = rng::stream(seed, 0);
    let points: Vec<Vec<f64>> = (0..m)
        .map(|_| loop {
            let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut r)).collect();
            let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if nv > 0.0 {
                break v.into_iter().map(|a| a / nv).collect();
            }
        })
        .collect();

    let sd = 1.0 / (n as f64).sqrt();
    let cap = 2.0 * d as f64;
    let matrices: Vec<Mat> = (0..1u64 << m)
        .map(|s| {
            let mut r = rng::stream(seed, s + 1);
            let data = (0..n * d).map(|_| { let z: f64 = StandardNormal.sample(&mut r); sd * z }).collect();
            let mut w = Mat::new(n, d, data).expect("finite gaussian entries");
            let f2 = w.frobenius().powi(2);
            if f2 > cap {
                w = w.scaled((cap / f2).sqrt());
                while w.frobenius().powi(2) > cap {
                    w = w.scaled(1.0 - f64::EPSILON);
                }
            }
            w
        })
        .collect();

    let mut fam = SeparatedFamily { points, matrices, separation: 0.0, meets_target: false, attempts: 1 };
    fam.separation = min_pairwise_distance(&fam.images());
    fam.meets_target = fam.separation >= SEPARATION_TARGET;
    fam
}

/// Exhaustive minimum pairwise Euclidean distance.
pub(crate) fn min_pairwise_distance(pts: &[Vec<f64>]) -> f64 {
    (0..pts.len())
        .into_par_iter()
        .map(|a| {
            let mut best = f64::INFINITY;
            for b in a + 1..pts.len() {
                let d2: f64 = pts[a].iter().zip(&pts[b]).map(|(x, y)| (x - y) * (x - y)).sum();
                best = best.min(d2);
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min)
        .sqrt()
}

/// Shattering instance with `W₀ = 0`.
///
/// Uses `d = ⌊L²B²/(128ε²)⌋`, `m = m_cap` points, `n = 10m` outputs and
/// witnesses `W_y = (8ε/L)·W′_y` from [`random_separated_family`]. The witness
/// is the Euclidean McShane extension of `±ε` over all `m·2^m` images, with
/// slope `2ε / separation`; this equals at most `L` when the family meets its
/// separation target.
pub fn zero_init_instance(b: f64, l: f64, eps: f64, m_cap: usize, seed: u64) -> Result<ShatterInstance> {
    zero_init_instance_with(b, l, eps, m_cap, seed, DEFAULT_MAX_RESAMPLES)
}

pub fn zero_init_instance_with(
    b: f64,
    l: f64,
    eps: f64,
    m_cap: usize,
    seed: u64,
    max_resamples: usize,
) -> Result<ShatterInstance> {
    if !(b >= 1.0) || !b.is_finite() {
        return Err(invalid(format!("B >= 1 violated (B = {b})")));
    }
    if !(l >= 1.0) || !l.is_finite() {
        return Err(invalid(format!("L >= 1 violated (L = {l})")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(invalid(format!("0 < eps <= 1 violated (eps = {eps})")));
    }
    let ratio = l * l * b * b / (128.0 * eps * eps);
    if ratio.floor() < 20.0 {
        return Err(invalid(format!("L^2 B^2 / (128 eps^2) >= 20 violated (value {ratio})")));
    }
    if ratio > 1e6 {
        return Err(Error::CapacityExceeded(format!("input dimension {ratio} is too large")));
    }
    check_m(m_cap, MAX_ENUMERATION_M)?;
    let d = ratio.floor() as usize;
    let m = m_cap;
    let n = 10 * m;

    let fam = random_separated_family(d, m, n, seed, max_resamples)?;
    let s = 8.0 * eps / l;
    let ws: Vec<Mat> = fam.matrices.iter().map(|w| w.scaled(s)).collect();
    let points: Vec<SparseVec> = fam.points.iter().map(|x| SparseVec::from_dense(x)).collect();
    let domain_radius = fam
        .points
        .iter()
        .map(|x| x.iter().map(|a| a * a).sum::<f64>().sqrt())
        .fold(0.0, f64::max);

    let mut inst = ShatterInstance::assemble(
        InstanceKind::ZeroInit,
        eps,
        points,
        WitnessMatrices::Explicit(ws),
        Mat::zeros(n, d),
        0.0,
        b,
        domain_radius,
        VectorMetric::Euclidean,
        placeholder_witness(n),
    );

    let mut anchors = SparseRows::new(n);
    let mut values = Vec::with_capacity(m << m);
    for y in 0..inst.labelings() {
        for i in 0..m {
            anchors.push(inst.image(y, i).view())?;
            values.push(if y >> i & 1 == 1 { eps } else { -eps });
        }
    }
    let alpha = s * fam.separation;
    if !(alpha > 0.0) {
        return Err(Error::NumericalFailure("random family has coinciding images".into()));
    }
    let f = AnchoredLipschitz::with_budget(anchors, values.clone(), budget(&values, alpha)?, VectorMetric::Euclidean)?;
    inst.family = Some(FamilyStats {
        separation: fam.separation,
        meets_target: fam.meets_target,
        attempts: fam.attempts,
        witness_lipschitz: f.lipschitz(),
    });
    inst.witness = std::sync::Arc::new(WitnessFn::McShane(f));
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_invariants() {
        let fam = random_separated_family(20, 2, 20, 1, 0).unwrap();
        for x in &fam.points {
            let n: f64 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-12);
        }
        for w in &fam.matrices {
            assert!(w.frobenius().powi(2) <= 40.0);
        }
        assert_eq!(fam.matrices.len(), 4);
    }

    #[test]
    fn precondition_names_inequality() {
        let err = zero_init_instance(1.0, 1.0, 1.0, 2, 0).unwrap_err().to_string();
        assert!(err.contains("128"), "{err}");
        assert!(random_separated_family(19, 2, 4, 0, 0).is_err());
        assert!(random_separated_family(20, 15, 4, 0, 0).is_err());
    }
}
