use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FunctionTable;
use crate::constructions::ShatterInstance;
use crate::error::{ensure_dim, invalid, Error, Result};
use crate::lipschitz::{Witness, WitnessFn};
use crate::numerics::Mat;
use crate::rng;

/// Largest witness set the enumerate strategy accepts.
pub const MAX_ENUMERATED_WITNESSES: usize = 1 << 20;
pub const ASCENT_RESTARTS: usize = 10;
pub const ASCENT_STEPS: usize = 200;
const MAX_MEMO_POINTS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SupStrategy {
    #[serde(rename = "enumerate-witnesses")]
    EnumerateWitnesses,
    #[serde(rename = "linear-closed-form")]
    LinearClosedForm,
    #[serde(rename = "projected-ascent")]
    ProjectedAscent,
}

impl SupStrategy {
    pub fn name(self) -> &'static str {
        match self {
            SupStrategy::EnumerateWitnesses => "enumerate-witnesses",
            SupStrategy::LinearClosedForm => "linear-closed-form",
            SupStrategy::ProjectedAscent => "projected-ascent",
        }
    }
}

impl std::str::FromStr for SupStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [SupStrategy::EnumerateWitnesses, SupStrategy::LinearClosedForm, SupStrategy::ProjectedAscent]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid(format!("unknown sup strategy {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RademacherEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub draws: usize,
    pub m: usize,
    pub sup_strategy: SupStrategy,
    pub is_lower_estimate: bool,
}

/// Functions `x ↦ g(W x)` over `‖W − W₀‖_F ≤ B` on fixed points, explored by
/// gradient ascent on `Σ σ_i g(W x_i)`.
pub trait ParametricClass: Sync {
    fn points(&self) -> usize;

    fn center(&self) -> &Mat;

    fn radius(&self) -> f64;

    /// `Σ σ_i g(W x_i)` and a (sub)gradient with respect to `W`.
    fn objective(&self, w: &Mat, signs: &[f64]) -> Result<(f64, Mat)>;
}

/// A fixed outer function composed with the matrix ball around `W₀`.
#[derive(Clone, Debug)]
pub struct OuterComposition {
    pub outer: Arc<WitnessFn>,
    pub points: Vec<Vec<f64>>,
    pub w0: Mat,
    pub radius: f64,
}

impl OuterComposition {
    pub fn new(outer: Arc<WitnessFn>, points: Vec<Vec<f64>>, w0: Mat, radius: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("composition class needs at least one point"));
        }
        ensure_dim(outer.dim(), w0.rows())?;
        for x in &points {
            ensure_dim(w0.cols(), x.len())?;
        }
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(invalid(format!("radius must be nonnegative, got {radius}")));
        }
        Ok(OuterComposition { outer, points, w0, radius })
    }

    pub fn from_instance(inst: &ShatterInstance) -> Result<Self> {
        Self::new(inst.witness.clone(), inst.dense_points(), inst.w0().clone(), inst.radius)
    }
}

impl ParametricClass for OuterComposition {
    fn points(&self) -> usize {
        self.points.len()
    }

    fn center(&self) -> &Mat {
        &self.w0
    }

    fn radius(&self) -> f64 {
        self.radius
    }

    fn objective(&self, w: &Mat, signs: &[f64]) -> Result<(f64, Mat)> {
        ensure_dim(self.points.len(), signs.len())?;
        let (n, d) = w.shape();
        let mut grad = Mat::zeros(n, d);
        let mut total = 0.0;
        for (x, s) in self.points.iter().zip(signs) {
            let z = w.matvec(x)?;
            total += s * self.outer.eval(&z)?;
            let g = self.outer.subgradient(&z)?;
            let data = grad.as_mut_slice();
            for (r, gr) in g.iter().enumerate().filter(|(_, v)| **v != 0.0) {
                for (c, xc) in x.iter().enumerate() {
                    data[r * d + c] += s * gr * xc;
                }
            }
        }
        Ok((total, grad))
    }
}

/// Class handed to [`rademacher_mc`].
pub enum FunctionClass<'a> {
    /// Finitely many functions given by their values.
    Finite(&'a FunctionTable),
    /// The witness functions `x ↦ f(W_y x)` of a shattering instance.
    Instance(&'a ShatterInstance),
    /// `x ↦ ⟨w, x⟩` over `‖w‖₂ ≤ radius`.
    LinearBall { points: &'a [Vec<f64>], radius: f64 },
    Parametric(&'a dyn ParametricClass),
}

impl FunctionClass<'_> {
    /// Strategy whose inner sup is exact, or ascent when none is.
    pub fn default_strategy(&self) -> SupStrategy {
        match self {
            FunctionClass::Finite(_) | FunctionClass::Instance(_) => SupStrategy::EnumerateWitnesses,
            FunctionClass::LinearBall { .. } => SupStrategy::LinearClosedForm,
            FunctionClass::Parametric(_) => SupStrategy::ProjectedAscent,
        }
    }
}

/// Monte Carlo estimate of `E_σ sup_f (1/m) Σ σ_i f(x_i)`. Draw `k` uses
/// stream `k` of `seed`, so results do not depend on thread count.
pub fn rademacher_mc(
    class: &FunctionClass<'_>,
    draws: usize,
    seed: u64,
    strategy: SupStrategy,
) -> Result<RademacherEstimate> {
    if draws == 0 {
        return Err(invalid("draws must be at least 1"));
    }
    match (class, strategy) {
        (FunctionClass::Finite(t), SupStrategy::EnumerateWitnesses) => {
            if t.len() > MAX_ENUMERATED_WITNESSES {
                return Err(Error::CapacityExceeded(format!(
                    "{} witnesses exceed the enumeration limit {MAX_ENUMERATED_WITNESSES}",
                    t.len()
                )));
            }
            Ok(enumerate(t, draws, seed))
        }
        (FunctionClass::Instance(inst), SupStrategy::EnumerateWitnesses) => {
            if inst.labelings() > MAX_ENUMERATED_WITNESSES {
                return Err(Error::CapacityExceeded(format!(
                    "2^{} witnesses exceed the enumeration limit {MAX_ENUMERATED_WITNESSES}",
                    inst.m
                )));
            }
            let table = FunctionTable::from_rows(inst.output_table()?)?;
            Ok(enumerate(&table, draws, seed))
        }
        (FunctionClass::LinearBall { points, radius }, SupStrategy::LinearClosedForm) => {
            rademacher_linear_closed_form(points, *radius, draws, seed)
        }
        (FunctionClass::Parametric(p), SupStrategy::ProjectedAscent) => ascent(*p, draws, seed),
        (FunctionClass::Instance(inst), SupStrategy::ProjectedAscent) => {
            ascent(&OuterComposition::from_instance(inst)?, draws, seed)
        }
        (_, s) => Err(invalid(format!("sup strategy {} does not apply to this class", s.name()))),
    }
}

/// Per draw `(B/m)‖Σ σ_i x_i‖₂`, the exact sup over the Euclidean ball.
///
/// ```
/// use caplab::complexity::rademacher_linear_closed_form;
/// let pts = vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0],
///                vec![0.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]];
/// let est = rademacher_linear_closed_form(&pts, 1.0, 100, 7).unwrap();
/// assert_eq!((est.mean, est.stderr), (0.5, 0.0));
/// ```
pub fn rademacher_linear_closed_form(
    points: &[Vec<f64>],
    radius: f64,
    draws: usize,
    seed: u64,
) -> Result<RademacherEstimate> {
    if draws == 0 {
        return Err(invalid("draws must be at least 1"));
    }
    let m = points.len();
    if m == 0 {
        return Err(invalid("need at least one point"));
    }
    let d = points[0].len();
    for x in points {
        ensure_dim(d, x.len())?;
    }
    let values: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|k| {
            let signs = draw_signs(seed, k, m);
            let mut acc = vec![0.0; d];
            for (x, s) in points.iter().zip(&signs) {
                acc.iter_mut().zip(x).for_each(|(a, v)| *a += s * v);
            }
            radius / m as f64 * acc.iter().map(|a| a * a).sum::<f64>().sqrt()
        })
        .collect();
    Ok(summarize(&values, m, SupStrategy::LinearClosedForm, false))
}

/// `m` points drawn uniformly from the unit sphere in `ℝ^dim`.
pub fn random_unit_points(m: usize, dim: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if dim == 0 {
        return Err(invalid("dimension must be positive"));
    }
    let mut r = rng::stream(seed, 0);
    Ok((0..m)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut r)).collect();
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if n > 0.0 {
                break v.into_iter().map(|a| a / n).collect();
            }
        })
        .collect())
}

fn draw_signs(seed: u64, draw: usize, m: usize) -> Vec<f64> {
    let mut r = rng::stream(seed, draw as u64);
    (0..m).map(|_| if r.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

fn pattern(signs: &[f64]) -> usize {
    signs.iter().enumerate().filter(|(_, s)| **s > 0.0).fold(0, |p, (i, _)| p | 1 << i)
}

fn table_sup(t: &FunctionTable, signs: &[f64]) -> f64 {
    let best = (0..t.len())
        .map(|k| t.row(k).iter().zip(signs).map(|(v, s)| v * s).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    best / t.m() as f64
}

fn enumerate(t: &FunctionTable, draws: usize, seed: u64) -> RademacherEstimate {
    let m = t.m();
    let signs: Vec<Vec<f64>> = (0..draws).into_par_iter().map(|k| draw_signs(seed, k, m)).collect();
    let values: Vec<f64> = if m <= MAX_MEMO_POINTS && (1usize << m) <= draws {
        // Few enough sign patterns: solve each one that occurs once.
        let mut seen = vec![false; 1 << m];
        let mut distinct = Vec::new();
        for s in &signs {
            let p = pattern(s);
            if !seen[p] {
                seen[p] = true;
                distinct.push(p);
            }
        }
        let solved: Vec<(usize, f64)> = distinct
            .par_iter()
            .map(|&p| {
                let s: Vec<f64> = (0..m).map(|i| if p >> i & 1 == 1 { 1.0 } else { -1.0 }).collect();
                (p, table_sup(t, &s))
            })
            .collect();
        let mut memo = vec![0.0; 1 << m];
        for (p, v) in solved {
            memo[p] = v;
        }
        signs.iter().map(|s| memo[pattern(s)]).collect()
    } else {
        signs.par_iter().map(|s| table_sup(t, s)).collect()
    };
    summarize(&values, m, SupStrategy::EnumerateWitnesses, false)
}

fn ascent(class: &dyn ParametricClass, draws: usize, seed: u64) -> Result<RademacherEstimate> {
    let m = class.points();
    let values: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|k| ascent_draw(class, seed, k))
        .collect::<Result<_>>()?;
    Ok(summarize(&values, m, SupStrategy::ProjectedAscent, true))
}

fn ascent_draw(class: &dyn ParametricClass, seed: u64, draw: usize) -> Result<f64> {
    let signs = draw_signs(seed, draw, class.points());
    let w0 = class.center();
    let radius = class.radius();
    let mut r = rng::stream(rng::derive_seed(seed, 1), draw as u64);
    let mut best = f64::NEG_INFINITY;
    for restart in 0..ASCENT_RESTARTS {
        let mut w = w0.clone();
        if restart > 0 && radius > 0.0 {
            let dir: Vec<f64> = (0..w0.as_slice().len()).map(|_| StandardNormal.sample(&mut r)).collect();
            let dn = dir.iter().map(|a| a * a).sum::<f64>().sqrt();
            let u: f64 = r.random();
            if dn > 0.0 {
                let s = radius * u / dn;
                w.as_mut_slice().iter_mut().zip(&dir).for_each(|(a, z)| *a += s * z);
            }
        }
        for step in 1..=ASCENT_STEPS {
            let (value, grad) = class.objective(&w, &signs)?;
            best = best.max(value);
            let gn = grad.frobenius();
            if gn == 0.0 || radius == 0.0 {
                break;
            }
            w.axpy(0.1 * radius / (step as f64).sqrt() / gn, &grad)?;
            w = crate::learner::project_frobenius_ball(&w, w0, radius)?;
        }
        best = best.max(class.objective(&w, &signs)?.0);
    }
    Ok(best / class.points() as f64)
}

fn summarize(values: &[f64], m: usize, strategy: SupStrategy, lower: bool) -> RademacherEstimate {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    RademacherEstimate { mean, stderr, draws: n, m, sup_strategy: strategy, is_lower_estimate: lower }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::nonzero_init_instance;

    #[test]
    fn shattered_instance_has_constant_sup() {
        let inst = nonzero_init_instance(4, 0.25).unwrap();
        let est = rademacher_mc(&FunctionClass::Instance(&inst), 200, 3, SupStrategy::EnumerateWitnesses).unwrap();
        assert_eq!(est.mean, 0.25);
        assert_eq!(est.stderr, 0.0);
        assert!(!est.is_lower_estimate);
    }

    #[test]
    fn memo_and_direct_paths_agree() {
        let t = FunctionTable::from_rows(vec![vec![0.1, -0.4, 0.3], vec![0.5, 0.2, -0.1]]).unwrap();
        // 8 patterns: 100 draws uses the memo, 5 draws does not.
        let a = rademacher_mc(&FunctionClass::Finite(&t), 100, 11, SupStrategy::EnumerateWitnesses).unwrap();
        let direct: Vec<f64> = (0..100).map(|k| table_sup(&t, &draw_signs(11, k, 3))).collect();
        assert_eq!(a.mean, summarize(&direct, 3, SupStrategy::EnumerateWitnesses, false).mean);
    }

    #[test]
    fn ascent_is_flagged_lower() {
        let inst = nonzero_init_instance(2, 0.25).unwrap();
        let est = rademacher_mc(&FunctionClass::Instance(&inst), 3, 0, SupStrategy::ProjectedAscent).unwrap();
        assert!(est.is_lower_estimate);
        // The ball holds more than the witnesses, so the sup may exceed eps.
        assert!(est.mean.is_finite() && est.mean >= -0.25);
    }

    #[test]
    fn mismatched_strategy() {
        let t = FunctionTable::from_rows(vec![vec![1.0]]).unwrap();
        assert!(rademacher_mc(&FunctionClass::Finite(&t), 1, 0, SupStrategy::LinearClosedForm).is_err());
        assert!(rademacher_mc(&FunctionClass::Finite(&t), 0, 0, SupStrategy::EnumerateWitnesses).is_err());
    }
}
