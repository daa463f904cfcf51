use serde::{Deserialize, Serialize};

use super::{
    convex_instance, nonzero_init_instance, separated::zero_init_instance_with, FamilyStats,
    InstanceKind, ShatterInstance,
};
use crate::error::Result;
use crate::lipschitz::WitnessFn;
use crate::numerics::VectorMetric;

/// Inputs that regenerate an instance bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ConstructionParams {
    #[serde(rename = "zero-init")]
    ZeroInit {
        #[serde(rename = "B")]
        b: f64,
        #[serde(rename = "L")]
        l: f64,
        eps: f64,
        m: usize,
        seed: u64,
        max_resamples: usize,
    },
    #[serde(rename = "nonzero-init")]
    NonzeroInit { m: usize, eps: f64 },
    #[serde(rename = "convex")]
    Convex { m: usize, eps: f64, kappa: f64 },
}

impl ConstructionParams {
    pub fn build(&self) -> Result<ShatterInstance> {
        match *self {
            ConstructionParams::ZeroInit { b, l, eps, m, seed, max_resamples } => {
                zero_init_instance_with(b, l, eps, m, seed, max_resamples)
            }
            ConstructionParams::NonzeroInit { m, eps } => nonzero_init_instance(m, eps),
            ConstructionParams::Convex { m, eps, kappa } => convex_instance(m, eps, kappa),
        }
    }
}

/// Summary of the outer function; the function itself is regenerated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessSummary {
    #[serde(rename = "type")]
    pub kind: String,
    /// Anchors or affine pieces.
    pub size: usize,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none", default)]
    pub lipschitz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shift: Option<f64>,
}

/// JSON description of an instance. Witness matrices are never stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceManifest {
    pub params: ConstructionParams,
    /// Whether points were rescaled into the unit ball.
    pub rescaled: bool,
    pub kind: InstanceKind,
    pub m: usize,
    pub eps: f64,
    pub d: usize,
    pub n: usize,
    #[serde(rename = "B")]
    pub radius: f64,
    #[serde(rename = "W0_norm")]
    pub w0_norm: f64,
    pub domain_radius: f64,
    pub metric: VectorMetric,
    pub witness_fn: WitnessSummary,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub family: Option<FamilyStats>,
}

impl InstanceManifest {
    /// Builds the instance and its manifest.
    pub fn create(params: ConstructionParams, rescaled: bool) -> Result<(Self, ShatterInstance)> {
        let mut inst = params.build()?;
        if rescaled {
            inst = inst.rescaled()?;
        }
        Ok((Self::describe(params, rescaled, &inst), inst))
    }

    pub fn describe(params: ConstructionParams, rescaled: bool, inst: &ShatterInstance) -> Self {
        let witness_fn = match inst.witness.as_ref() {
            WitnessFn::McShane(f) => WitnessSummary {
                kind: "mcshane".into(),
                size: f.len(),
                lipschitz: Some(f.lipschitz()),
                kappa: None,
                shift: None,
            },
            WitnessFn::MaxAffine(f) => WitnessSummary {
                kind: "max-affine".into(),
                size: f.pieces().len(),
                lipschitz: Some(f.lipschitz_bound(inst.metric)),
                kappa: Some(f.kappa()),
                shift: Some(f.shift()),
            },
        };
        InstanceManifest {
            params,
            rescaled,
            kind: inst.kind,
            m: inst.m,
            eps: inst.margin,
            d: inst.d(),
            n: inst.n(),
            radius: inst.radius,
            w0_norm: inst.w0_norm,
            domain_radius: inst.domain_radius,
            metric: inst.metric,
            witness_fn,
            family: inst.family.clone(),
        }
    }

    pub fn regenerate(&self) -> Result<ShatterInstance> {
        let mut inst = self.params.build()?;
        if self.rescaled {
            inst = inst.rescaled()?;
        }
        Ok(inst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip() {
        let (man, inst) =
            InstanceManifest::create(ConstructionParams::NonzeroInit { m: 3, eps: 0.25 }, true).unwrap();
        let json = serde_json::to_string(&man).unwrap();
        let back: InstanceManifest = serde_json::from_str(&json).unwrap();
        assert_eq!(back, man);
        let again = back.regenerate().unwrap();
        assert_eq!(again.w0().as_slice(), inst.w0().as_slice());
        assert_eq!(man.w0_norm, 2.0 * 0.25 * 2f64.sqrt());
    }
}
