use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::FunctionTable;
use crate::error::{invalid, Result};

/// Proper cover: indices of table rows acting as centers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cover {
    pub centers: Vec<usize>,
    /// Largest distance from any function to its nearest center.
    pub radius: f64,
}

impl Cover {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

/// Greedy farthest-point cover in the empirical L2 metric: start from row 0
/// and keep adding the row farthest from the current centers (lowest index on
/// ties) until every row is within `eps`.
pub fn empirical_cover(table: &FunctionTable, eps: f64) -> Result<Cover> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(invalid(format!("cover radius must be nonnegative, got {eps}")));
    }
    let n = table.len();
    let mut centers = vec![0];
    let mut nearest: Vec<f64> = (0..n).map(|k| table.distance(0, k)).collect();
    loop {
        let (far, dist) = nearest
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, d)| if *d > best.1 { (k, *d) } else { best });
        if dist <= eps {
            return Ok(Cover { centers, radius: dist.max(0.0) });
        }
        centers.push(far);
        for (k, d) in nearest.iter_mut().enumerate() {
            *d = d.min(table.distance(far, k));
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoverKind {
    /// Linear predictors `‖w‖ ≤ B` on inputs of norm at most `b_x`.
    #[serde(rename = "scalar-linear")]
    ScalarLinear,
    /// Linear maps into `ℝ^r` with `‖W‖_F ≤ B`.
    #[serde(rename = "matrix-linear")]
    MatrixLinear,
    /// Constant functions with values in `(0, B]`.
    #[serde(rename = "constants")]
    Constants,
    /// `L`-Lipschitz functions on the radius-`B` ball of `ℝ^r` composed with matrix-linear maps.
    #[serde(rename = "lipschitz-composition")]
    LipschitzComposition,
    /// An `L`-Lipschitz map of `k` scalar-linear classes.
    #[serde(rename = "contraction")]
    Contraction,
}

impl CoverKind {
    pub const ALL: [CoverKind; 5] = [
        CoverKind::ScalarLinear,
        CoverKind::MatrixLinear,
        CoverKind::Constants,
        CoverKind::LipschitzComposition,
        CoverKind::Contraction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CoverKind::ScalarLinear => "scalar-linear",
            CoverKind::MatrixLinear => "matrix-linear",
            CoverKind::Constants => "constants",
            CoverKind::LipschitzComposition => "lipschitz-composition",
            CoverKind::Contraction => "contraction",
        }
    }

    /// Parameters the formula reads, besides the optional constant `c`.
    pub fn parameters(self) -> &'static [&'static str] {
        match self {
            CoverKind::ScalarLinear => &["B", "b_x", "eps"],
            CoverKind::MatrixLinear => &["B", "r", "eps"],
            CoverKind::Constants => &["B", "eps"],
            CoverKind::LipschitzComposition => &["B", "L", "r", "eps"],
            CoverKind::Contraction => &["B", "b_x", "L", "k", "eps"],
        }
    }
}

impl std::str::FromStr for CoverKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        CoverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid(format!("unknown cover formula {s:?}")))
    }
}

/// A named cover-size formula with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverFormula {
    pub kind: CoverKind,
    pub params: BTreeMap<String, f64>,
}

impl CoverFormula {
    pub fn new(kind: CoverKind, params: &[(&str, f64)]) -> Self {
        CoverFormula { kind, params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect() }
    }

    fn get(&self, name: &str) -> Result<f64> {
        let v = *self
            .params
            .get(name)
            .ok_or_else(|| invalid(format!("{} formula is missing parameter {name}", self.kind.name())))?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(invalid(format!("parameter {name} must be positive, got {v}")));
        }
        Ok(v)
    }

    fn constant(&self) -> Result<f64> {
        if self.params.contains_key("c") {
            self.get("c")
        } else {
            Ok(1.0)
        }
    }

    /// Copy with `eps` replaced.
    pub fn at_scale(&self, eps: f64) -> CoverFormula {
        let mut f = self.clone();
        f.params.insert("eps".into(), eps);
        f
    }

    /// `2 log₂(B) / ε`, the looser form reported next to the constants bound.
    pub fn envelope(&self) -> Result<Option<f64>> {
        if self.kind != CoverKind::Constants {
            return Ok(None);
        }
        Ok(Some(2.0 * self.get("B")?.log2() / self.get("eps")?))
    }
}

/// Upper bound on the natural log of the covering number.
///
/// ```
/// use caplab::complexity::{cover_bound, CoverFormula, CoverKind};
/// let f = CoverFormula::new(CoverKind::ScalarLinear, &[("B", 1.0), ("b_x", 1.0), ("eps", 1.0)]);
/// assert_eq!(cover_bound(&f).unwrap(), 1.0);
/// ```
pub fn cover_bound(f: &CoverFormula) -> Result<f64> {
    let c = f.constant()?;
    let eps = f.get("eps")?;
    Ok(match f.kind {
        CoverKind::ScalarLinear => (c * f.get("B")? * f.get("b_x")? / eps).powi(2),
        CoverKind::MatrixLinear => {
            let (r, b) = (f.get("r")?, f.get("B")?);
            c * r * r * b * b / (eps * eps)
        }
        CoverKind::Constants => {
            let b = f.get("B")?;
            if b < 2.0 {
                return Err(invalid(format!("constants formula needs B >= 2, got {b}")));
            }
            (b / eps).ceil().ln()
        }
        CoverKind::LipschitzComposition => {
            let (b, l, r) = (f.get("B")?, f.get("L")?, f.get("r")?);
            let head = (1.0 + 8.0 * b * l / eps).powf(r) * (8.0 * b / eps).ln();
            // The inner class is matrix-linear at scale eps / (4L).
            head.max(0.0) + 16.0 * c * r * r * b * b * l * l / (eps * eps)
        }
        CoverKind::Contraction => {
            let (b, bx, l, k) = (f.get("B")?, f.get("b_x")?, f.get("L")?, f.get("k")?);
            // k scalar-linear classes, each covered at scale eps / (√k L).
            k * (c * b * bx * k.sqrt() * l / eps).powi(2)
        }
    })
}
