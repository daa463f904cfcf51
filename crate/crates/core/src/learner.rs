//! Projected SGD around a reference matrix, and the two experiments on the
//! convex instance: excess risk of SGD and the gap between empirical and
//! population averages of an adversarial witness.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructions::ShatterInstance;
use crate::error::{invalid, Result};
use crate::lipschitz::{Witness, WitnessFn};
use crate::numerics::Mat;
use crate::rng;

/// Slack on the excess-risk check, in absolute loss units.
pub const EXCESS_TOLERANCE: f64 = 0.05;
const BALL_TOLERANCE: f64 = 1e-12;
const GAP_TOLERANCE: f64 = 1e-12;

/// Nearest point to `w` in `{W : ‖W − W₀‖_F ≤ radius}`.
///
/// ```
/// use caplab::learner::project_frobenius_ball;
/// use caplab::numerics::Mat;
/// let w0 = Mat::zeros(1, 2);
/// let w = Mat::new(1, 2, vec![0.0, 4.0]).unwrap();
/// let p = project_frobenius_ball(&w, &w0, 2.0).unwrap();
/// assert_eq!(p.as_slice(), &[0.0, 2.0]);
/// ```
pub fn project_frobenius_ball(w: &Mat, w0: &Mat, radius: f64) -> Result<Mat> {
    if !(radius >= 0.0) {
        return Err(invalid(format!("radius must be nonnegative, got {radius}")));
    }
    let dist = w.frobenius_distance(w0)?;
    if dist <= radius {
        return Ok(w.clone());
    }
    let mut out = w0.clone();
    out.axpy(radius / dist, &w.sub(w0)?)?;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum StepSize {
    /// `√(B² / (L² T))`.
    Auto,
    Fixed(f64),
}

#[derive(Clone, Debug)]
pub struct SgdConfig {
    pub w0: Mat,
    pub radius: f64,
    pub steps: usize,
    pub eta: StepSize,
    /// Bound on the subgradient Frobenius norm.
    pub lipschitz: f64,
    pub seed: u64,
}

impl SgdConfig {
    pub fn resolved_eta(&self) -> Result<f64> {
        if self.steps == 0 {
            return Err(invalid("T must be at least 1"));
        }
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(invalid(format!("radius must be positive, got {}", self.radius)));
        }
        let eta = match self.eta {
            StepSize::Auto => {
                if !(self.lipschitz > 0.0) {
                    return Err(invalid(format!("L must be positive, got {}", self.lipschitz)));
                }
                (self.radius * self.radius / (self.lipschitz * self.lipschitz * self.steps as f64)).sqrt()
            }
            StepSize::Fixed(e) => e,
        };
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(invalid(format!("step size must be positive, got {eta}")));
        }
        Ok(eta)
    }
}

/// Source of stochastic losses: at `w`, draws an example and returns the loss
/// there together with a subgradient.
pub trait StochasticOracle {
    fn sample(&mut self, w: &Mat, rng: &mut ChaCha8Rng) -> Result<(f64, Mat)>;
}

impl<F: FnMut(&Mat, &mut ChaCha8Rng) -> Result<(f64, Mat)>> StochasticOracle for F {
    fn sample(&mut self, w: &Mat, rng: &mut ChaCha8Rng) -> Result<(f64, Mat)> {
        self(w, rng)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub loss: f64,
    pub grad_norm: f64,
    /// `‖W_t − W₀‖_F`.
    pub distance: f64,
    /// The oracle returned a subgradient longer than the configured `L`.
    pub exceeds_lipschitz: bool,
}

#[derive(Clone, Debug)]
pub struct SgdResult {
    /// Average of the iterates `W_1..W_T`.
    pub w_hat: Mat,
    pub trace: Vec<StepRecord>,
    pub eta: f64,
    /// `Σ ⟨W_t − W*, V_t⟩`.
    pub regret_lhs: f64,
    /// `‖W* − W₀‖²/(2η) + (η/2) Σ ‖V_t‖²`.
    pub regret_rhs: f64,
}

impl SgdResult {
    /// Every iterate and the average lie in the ball, up to rounding.
    pub fn feasible(&self, w0: &Mat, radius: f64) -> bool {
        let tol = radius + BALL_TOLERANCE * radius.max(1.0);
        self.trace.iter().all(|r| r.distance <= tol)
            && self.w_hat.frobenius_distance(w0).is_ok_and(|d| d <= tol)
    }
}

/// Projected SGD started at `W₀`; `comparator` defaults to `W₀`.
pub fn sgd_run(cfg: &SgdConfig, oracle: &mut dyn StochasticOracle, comparator: Option<&Mat>) -> Result<SgdResult> {
    let eta = cfg.resolved_eta()?;
    let w_star = comparator.unwrap_or(&cfg.w0);
    let mut rng = rng::stream(cfg.seed, 0);
    let mut w = cfg.w0.clone();
    let mut sum = Mat::zeros(w.rows(), w.cols());
    let mut trace = Vec::with_capacity(cfg.steps);
    let (mut lhs, mut grad_sq) = (0.0, 0.0);
    for step in 1..=cfg.steps {
        let (loss, v) = oracle.sample(&w, &mut rng)?;
        let gn = v.frobenius();
        lhs += w.sub(w_star)?.inner(&v)?;
        grad_sq += gn * gn;
        trace.push(StepRecord {
            step,
            loss,
            grad_norm: gn,
            distance: w.frobenius_distance(&cfg.w0)?,
            exceeds_lipschitz: gn > cfg.lipschitz * (1.0 + 1e-12),
        });
        sum.axpy(1.0, &w)?;
        w.axpy(-eta, &v)?;
        w = project_frobenius_ball(&w, &cfg.w0, cfg.radius)?;
    }
    let d = w_star.frobenius_distance(&cfg.w0)?;
    Ok(SgdResult {
        w_hat: sum.scaled(1.0 / cfg.steps as f64),
        trace,
        eta,
        regret_lhs: lhs,
        regret_rhs: d * d / (2.0 * eta) + eta / 2.0 * grad_sq,
    })
}

/// Loss `W ↦ f(W x)` at one point, with its subgradient `g xᵀ`.
pub fn composed_loss(f: &WitnessFn, w: &Mat, x: &[f64]) -> Result<(f64, Mat)> {
    let z = w.matvec(x)?;
    let g = f.subgradient(&z)?;
    let mut v = Mat::zeros(w.rows(), w.cols());
    let d = w.cols();
    let data = v.as_mut_slice();
    for (r, gr) in g.iter().enumerate().filter(|(_, a)| **a != 0.0) {
        for (c, xc) in x.iter().enumerate() {
            data[r * d + c] = gr * xc;
        }
    }
    Ok((f.eval(&z)?, v))
}

/// `(1/m) Σ_i f(W x_i)`, the exact population loss under the uniform distribution on the points.
pub fn population_loss(f: &WitnessFn, w: &Mat, points: &[Vec<f64>]) -> Result<f64> {
    let mut acc = 0.0;
    for x in points {
        acc += f.eval(&w.matvec(x)?)?;
    }
    Ok(acc / points.len() as f64)
}

/// Lipschitz constant of `W ↦ f(W x)` in Frobenius norm over the points:
/// largest Euclidean piece norm times largest point norm.
pub fn convex_loss_lipschitz(inst: &ShatterInstance) -> Result<f64> {
    let f = inst
        .witness
        .as_max_affine()
        .ok_or_else(|| invalid("excess-risk experiment needs a convex (max-affine) witness"))?;
    let piece = f.pieces().iter().map(|p| p.norm(crate::numerics::VectorMetric::Euclidean)).fold(0.0, f64::max);
    let x = inst.points.iter().map(|p| p.view().norm(crate::numerics::VectorMetric::Euclidean)).fold(0.0, f64::max);
    Ok(piece * x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcessRiskRow {
    #[serde(rename = "T")]
    pub steps: usize,
    pub seed: u64,
    pub excess: f64,
    pub bound: f64,
    pub pass: bool,
    /// Every iterate stayed in the ball.
    pub feasible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcessRiskSummary {
    #[serde(rename = "T")]
    pub steps: usize,
    pub mean_excess: f64,
    /// `BL/√T`.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcessRiskTable {
    /// Population loss of the all-negative witness.
    pub reference_loss: f64,
    /// Smallest population loss over the enumerated witnesses.
    pub best_witness_loss: f64,
    #[serde(rename = "L")]
    pub lipschitz: f64,
    pub rows: Vec<ExcessRiskRow>,
    pub summary: Vec<ExcessRiskSummary>,
}

/// Runs SGD from `W₀` on uniform draws over the instance points for each
/// `(T, seed)` and compares the population loss of the average iterate with
/// that of the all-negative witness `W_0`.
pub fn excess_risk_experiment(inst: &ShatterInstance, t_grid: &[usize], seeds: &[u64]) -> Result<ExcessRiskTable> {
    let lipschitz = convex_loss_lipschitz(inst)?;
    if t_grid.is_empty() || seeds.is_empty() {
        return Err(invalid("T grid and seed list must be nonempty"));
    }
    let points = inst.dense_points();
    let f = inst.witness.as_ref();
    let reference_loss = population_loss(f, &inst.witness_matrix(0), &points)?;
    let best_witness_loss = if inst.m <= crate::constructions::MAX_ENUMERATION_M {
        inst.output_table()?
            .iter()
            .map(|row| row.iter().sum::<f64>() / inst.m as f64)
            .fold(f64::INFINITY, f64::min)
    } else {
        reference_loss
    };
    let b = inst.radius;
    let cells: Vec<(usize, u64)> = t_grid.iter().flat_map(|t| seeds.iter().map(move |s| (*t, *s))).collect();
    let rows: Vec<ExcessRiskRow> = cells
        .par_iter()
        .map(|&(steps, seed)| {
            let cfg = SgdConfig {
                w0: inst.w0().clone(),
                radius: b,
                steps,
                eta: StepSize::Auto,
                lipschitz,
                seed: rng::derive_seed(seed, steps as u64),
            };
            let mut oracle = |w: &Mat, r: &mut ChaCha8Rng| composed_loss(f, w, &points[r.random_range(0..points.len())]);
            let res = sgd_run(&cfg, &mut oracle, None)?;
            let excess = population_loss(f, &res.w_hat, &points)? - reference_loss;
            let bound = b * lipschitz / (steps as f64).sqrt();
            Ok(ExcessRiskRow {
                steps,
                seed,
                excess,
                bound,
                pass: excess <= bound + EXCESS_TOLERANCE,
                feasible: res.feasible(&cfg.w0, b),
            })
        })
        .collect::<Result<_>>()?;
    let summary = t_grid
        .iter()
        .map(|&steps| {
            let cell: Vec<&ExcessRiskRow> = rows.iter().filter(|r| r.steps == steps).collect();
            let mean_excess = cell.iter().map(|r| r.excess).sum::<f64>() / cell.len() as f64;
            let bound = b * lipschitz / (steps as f64).sqrt();
            ExcessRiskSummary { steps, mean_excess, bound, pass: mean_excess <= bound + EXCESS_TOLERANCE }
        })
        .collect();
    Ok(ExcessRiskTable { reference_loss, best_witness_loss, lipschitz, rows, summary })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UcGapRow {
    pub m: usize,
    pub seed: u64,
    pub support: usize,
    pub empirical: f64,
    pub population: f64,
    pub gap: f64,
    /// The margin `ε`, which the gap should reach.
    pub bound: f64,
    pub pass: bool,
}

/// Draws `sample_size` points with replacement, picks the witness labeled
/// positive exactly on the drawn support, and compares its sample average
/// with its exact average over all points.
///
/// ```
/// use caplab::constructions::convex_instance;
/// use caplab::learner::uc_gap_experiment;
/// let inst = convex_instance(2, 0.25, 0.5).unwrap();
/// let row = &uc_gap_experiment(&inst, 1, &[0]).unwrap()[0];
/// assert_eq!((row.support, row.population), (1, 0.0));
/// assert!(row.pass);
/// ```
pub fn uc_gap_experiment(inst: &ShatterInstance, sample_size: usize, seeds: &[u64]) -> Result<Vec<UcGapRow>> {
    if sample_size == 0 || sample_size > inst.m {
        return Err(invalid(format!("sample size must lie in [1, m = {}], got {sample_size}", inst.m)));
    }
    let eps = inst.margin;
    seeds
        .par_iter()
        .map(|&seed| {
            let mut r = rng::stream(seed, 0);
            let sample: Vec<usize> = (0..sample_size).map(|_| r.random_range(0..inst.m)).collect();
            let y = sample.iter().fold(0usize, |acc, i| acc | 1 << i);
            let empirical = sample.iter().map(|&i| inst.output(y, i)).sum::<f64>() / sample_size as f64;
            let population = (0..inst.m).map(|i| inst.output(y, i)).sum::<f64>() / inst.m as f64;
            let gap = empirical - population;
            Ok(UcGapRow {
                m: inst.m,
                seed,
                support: y.count_ones() as usize,
                empirical,
                population,
                gap,
                bound: eps,
                pass: gap >= eps - GAP_TOLERANCE,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::convex_instance;

    #[test]
    fn projection_cases() {
        let w0 = Mat::new(1, 2, vec![1.0, 1.0]).unwrap();
        let inside = Mat::new(1, 2, vec![1.5, 1.0]).unwrap();
        assert_eq!(project_frobenius_ball(&inside, &w0, 1.0).unwrap(), inside);
        let outside = Mat::new(1, 2, vec![1.0, 3.0]).unwrap();
        assert_eq!(project_frobenius_ball(&outside, &w0, 1.0).unwrap().as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn zero_subgradients_stay_at_w0() {
        let cfg = SgdConfig { w0: Mat::identity(2), radius: 1.0, steps: 5, eta: StepSize::Auto, lipschitz: 1.0, seed: 0 };
        let mut oracle = |w: &Mat, _: &mut ChaCha8Rng| Ok((0.0, Mat::zeros(w.rows(), w.cols())));
        let res = sgd_run(&cfg, &mut oracle, None).unwrap();
        assert_eq!(res.w_hat, cfg.w0);
        assert_eq!(res.eta, (1.0f64 / 5.0).sqrt());
    }

    #[test]
    fn long_subgradients_are_flagged() {
        let cfg = SgdConfig { w0: Mat::zeros(1, 1), radius: 1.0, steps: 2, eta: StepSize::Fixed(0.1), lipschitz: 1.0, seed: 0 };
        let mut oracle = |_: &Mat, _: &mut ChaCha8Rng| Ok((0.0, Mat::new(1, 1, vec![2.0]).unwrap()));
        let res = sgd_run(&cfg, &mut oracle, None).unwrap();
        assert!(res.trace.iter().all(|r| r.exceeds_lipschitz));
    }

    #[test]
    fn convex_loss_constant() {
        let inst = convex_instance(3, 0.2, 0.5).unwrap();
        assert!((convex_loss_lipschitz(&inst).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_step_envelope() {
        let inst = convex_instance(3, 0.2, 0.5).unwrap();
        let t = excess_risk_experiment(&inst, &[1], &[0, 1]).unwrap();
        assert!(t.summary[0].mean_excess <= inst.radius * t.lipschitz);
        assert!((t.reference_loss + 0.2).abs() < 1e-15);
    }
}
