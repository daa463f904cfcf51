use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ShatterInstance, MAX_ENUMERATION_M};
use crate::error::{Error, Result};
use crate::numerics::spectral_norm;

/// At most this many failing checks are listed in a report.
pub const MAX_FAILURES_LISTED: usize = 32;
const SLACK_TOLERANCE: f64 = 1e-12;
const W0_NORM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShatterFailure {
    pub labeling: usize,
    pub point: usize,
    pub value: f64,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub pass: bool,
    /// Smallest signed margin surplus over all `(labeling, point)` checks.
    pub worst_slack: f64,
    pub labelings: usize,
    pub checks: usize,
    pub failure_count: usize,
    /// First failing checks, in labeling-then-point order.
    pub failures: Vec<ShatterFailure>,
    /// Largest `‖W_y − W₀‖_F`.
    pub max_offset_norm: f64,
    pub radius_ok: bool,
    pub w0_norm_measured: f64,
    pub w0_norm_ok: bool,
}

struct LabelingOutcome {
    worst: f64,
    failures: Vec<ShatterFailure>,
    failure_count: usize,
    offset: f64,
}

/// Checks every labeling and point: `f(W_y x_i) ≥ s + ε` where bit `i` of `y`
/// is set and `≤ s − ε` otherwise, plus the norm constraints on `W_y` and `W₀`.
pub fn verify_shattering(inst: &ShatterInstance) -> Result<VerifyReport> {
    if inst.m > MAX_ENUMERATION_M {
        return Err(Error::CapacityExceeded(format!(
            "verifying 2^{} labelings (limit m = {MAX_ENUMERATION_M})",
            inst.m
        )));
    }
    let (s, eps) = (inst.threshold, inst.margin);
    let outcomes: Vec<LabelingOutcome> = (0..inst.labelings())
        .into_par_iter()
        .map(|y| {
            let mut out = LabelingOutcome {
                worst: f64::INFINITY,
                failures: Vec::new(),
                failure_count: 0,
                offset: inst.offset_norm(y),
            };
            for i in 0..inst.m {
                let value = inst.output(y, i);
                let slack = if y >> i & 1 == 1 { value - (s + eps) } else { (s - eps) - value };
                out.worst = out.worst.min(slack);
                if !(slack >= -SLACK_TOLERANCE) {
                    out.failure_count += 1;
                    if out.failures.len() < MAX_FAILURES_LISTED {
                        out.failures.push(ShatterFailure { labeling: y, point: i, value, slack });
                    }
                }
            }
            out
        })
        .collect();

    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    let mut failure_count = 0;
    let mut max_offset = 0.0f64;
    for o in outcomes {
        worst = worst.min(o.worst);
        failure_count += o.failure_count;
        max_offset = max_offset.max(o.offset);
        for f in o.failures {
            if failures.len() < MAX_FAILURES_LISTED {
                failures.push(f);
            }
        }
    }
    let radius_ok = max_offset <= inst.radius + SLACK_TOLERANCE * inst.radius.max(1.0);
    let w0_norm_measured = spectral_norm(inst.w0())?;
    let w0_norm_ok = (w0_norm_measured - inst.w0_norm).abs() <= W0_NORM_TOLERANCE;
    Ok(VerifyReport {
        pass: worst >= -SLACK_TOLERANCE && radius_ok && w0_norm_ok,
        worst_slack: worst,
        labelings: inst.labelings(),
        checks: inst.labelings() * inst.m,
        failure_count,
        failures,
        max_offset_norm: max_offset,
        radius_ok,
        w0_norm_measured,
        w0_norm_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{convex_instance, nonzero_init_instance, WitnessMatrices};
    use super::*;

    #[test]
    fn single_point_instances_pass() {
        for inst in [nonzero_init_instance(1, 0.25).unwrap(), convex_instance(1, 0.2, 0.5).unwrap()] {
            let r = verify_shattering(&inst).unwrap();
            assert!(r.pass, "{r:?}");
            assert!(r.worst_slack.abs() < 1e-15);
        }
    }

    #[test]
    fn zeroed_entry_is_reported() {
        let inst = nonzero_init_instance(2, 0.25).unwrap();
        let mut broken = inst.materialize().unwrap();
        if let WitnessMatrices::Explicit(ws) = &mut broken.witnesses {
            // W_0 loses the unit entry that encodes labeling 0.
            ws[0].set(2, 2, 0.0);
        }
        let r = verify_shattering(&broken).unwrap();
        assert!(!r.pass);
        assert!(r.failures.iter().any(|f| f.labeling == 0));
        assert!(r.failures.iter().all(|f| f.labeling == 0));
    }
}
