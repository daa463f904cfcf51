use serde::de::Error as _;
use serde::ser::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Witness;
use crate::error::{ensure_dim, invalid, Error, Result};
use crate::numerics::{DenseQuery, GroupedRows, SparseRows, SparseVec, SparseView, VectorMetric};

/// Anchor sets larger than this are refused by the JSON encoder.
pub const MAX_SERIALIZED_ANCHORS: usize = 1_000_000;

/// `f(x) = min_i (p_i + L·d(x, x_i))` over finitely many anchors `(x_i, p_i)`.
///
/// Anchors sharing a value are grouped, so evaluation at a sparse point costs
/// one exact distance per anchor overlapping the point's support plus one
/// norm comparison per distinct value.
#[derive(Clone, Debug)]
pub struct AnchoredLipschitz {
    rows: SparseRows,
    values: Vec<f64>,
    lipschitz: f64,
    metric: VectorMetric,
    /// Distinct values, ascending; `grouped.group_of` indexes into it.
    levels: Vec<f64>,
    grouped: GroupedRows,
    minimal_slope: f64,
    max_nnz: usize,
}

impl AnchoredLipschitz {
    /// Builds the extension with slope `lipschitz`, failing if the anchors
    /// need a steeper one.
    pub fn mcshane_extend(
        rows: SparseRows,
        values: Vec<f64>,
        lipschitz: f64,
        metric: VectorMetric,
    ) -> Result<Self> {
        let f = Self::build(rows, values, lipschitz, metric)?;
        // Relative slack absorbs rounding in distances already bounded by the caller.
        if f.minimal_slope > lipschitz * (1.0 + 1e-12) {
            return Err(Error::BudgetTooSmall { given: lipschitz, minimal: f.minimal_slope });
        }
        Ok(f)
    }

    /// Builds the extension with slope `max(budget, minimal feasible slope)`.
    pub fn with_budget(
        rows: SparseRows,
        values: Vec<f64>,
        budget: f64,
        metric: VectorMetric,
    ) -> Result<Self> {
        let mut f = Self::build(rows, values, budget, metric)?;
        f.lipschitz = f.lipschitz.max(f.minimal_slope);
        Ok(f)
    }

    fn build(rows: SparseRows, values: Vec<f64>, lipschitz: f64, metric: VectorMetric) -> Result<Self> {
        ensure_dim(rows.len(), values.len())?;
        if rows.is_empty() {
            return Err(invalid("at least one anchor is required"));
        }
        if !(lipschitz >= 0.0) || !lipschitz.is_finite() {
            return Err(invalid(format!("Lipschitz budget must be finite and nonnegative, got {lipschitz}")));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("anchor {k} has a non-finite value")));
        }
        if let Some(k) = rows.iter().position(|r| r.val.iter().any(|v| !v.is_finite())) {
            return Err(invalid(format!("anchor {k} has a non-finite coordinate")));
        }

        let mut levels = values.clone();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let group_of: Vec<u32> = values
            .iter()
            .map(|v| levels.binary_search_by(|l| l.total_cmp(v)).unwrap() as u32)
            .collect();
        let grouped = GroupedRows::build(&rows, group_of, levels.len(), metric);
        let max_nnz = rows.iter().map(|r| r.nnz()).max().unwrap_or(0);

        let mut f = AnchoredLipschitz {
            rows,
            values,
            lipschitz,
            metric,
            levels,
            grouped,
            minimal_slope: 0.0,
            max_nnz,
        };
        f.minimal_slope = f.scan_minimal_slope()?;
        Ok(f)
    }

    /// `max_{i≠j} |p_i − p_j| / d(x_i, x_j)`; rejects repeated anchors.
    fn scan_minimal_slope(&self) -> Result<f64> {
        let mut slope = 0.0f64;
        for k in 0..self.rows.len() {
            let q = self.rows.row(k);
            let dists = self.grouped.group_min_distances(&self.rows, q, Some(k as u32));
            let own = self.grouped.group_of[k] as usize;
            for (g, d) in dists.iter().enumerate() {
                if g == own {
                    if *d == 0.0 {
                        return Err(invalid(format!("anchor {k} is repeated")));
                    }
                    continue;
                }
                if d.is_infinite() {
                    continue;
                }
                slope = slope.max((self.values[k] - self.levels[g]).abs() / d);
            }
        }
        Ok(slope)
    }

    pub fn dim(&self) -> usize {
        self.rows.dim()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn metric(&self) -> VectorMetric {
        self.metric
    }

    /// Steepest slope between two anchors.
    pub fn minimal_slope(&self) -> f64 {
        self.minimal_slope
    }

    pub fn anchors(&self) -> &SparseRows {
        &self.rows
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval_sparse(&self, x: SparseView<'_>) -> f64 {
        let dists = self.grouped.group_min_distances(&self.rows, x, None);
        self.levels
            .iter()
            .zip(&dists)
            .map(|(v, d)| v + self.lipschitz * d)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        ensure_dim(self.dim(), x.len())?;
        let nnz = x.iter().filter(|v| **v != 0.0).count();
        if nnz * 8 <= x.len() {
            return Ok(self.eval_sparse(SparseVec::from_dense(x).view()));
        }
        let q = DenseQuery::new(x, self.metric, self.max_nnz);
        Ok(self
            .rows
            .iter()
            .zip(&self.values)
            .map(|(r, v)| v + self.lipschitz * q.distance(r))
            .fold(f64::INFINITY, f64::min))
    }

    /// A subgradient at dense `x`: `L` times the gradient of the distance to
    /// the active anchor (lowest index on ties), or zero at the anchor itself.
    pub fn subgradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(self.dim(), x.len())?;
        let q = DenseQuery::new(x, self.metric, self.max_nnz);
        let mut best = (f64::INFINITY, 0);
        for (k, (r, v)) in self.rows.iter().zip(&self.values).enumerate() {
            let val = v + self.lipschitz * q.distance(r);
            if val < best.0 {
                best = (val, k);
            }
        }
        let mut g = x.to_vec();
        let a = self.rows.row(best.1);
        for (j, v) in a.idx.iter().zip(a.val) {
            g[*j as usize] -= v;
        }
        match self.metric {
            VectorMetric::Euclidean => {
                let n = g.iter().map(|t| t * t).sum::<f64>().sqrt();
                let s = if n > 0.0 { self.lipschitz / n } else { 0.0 };
                g.iter_mut().for_each(|t| *t *= s);
            }
            VectorMetric::Infinity => {
                let (j, n) = g.iter().enumerate().fold((0, 0.0f64), |b, (j, t)| if t.abs() > b.1 { (j, t.abs()) } else { b });
                let sign = if n > 0.0 { g[j].signum() } else { 0.0 };
                g.iter_mut().for_each(|t| *t = 0.0);
                g[j] = self.lipschitz * sign;
            }
        }
        Ok(g)
    }

    /// Reference evaluation by a plain scan over every anchor.
    pub fn eval_exhaustive(&self, x: SparseView<'_>) -> f64 {
        self.rows
            .iter()
            .zip(&self.values)
            .map(|(r, v)| v + self.lipschitz * x.distance(&r, self.metric))
            .fold(f64::INFINITY, f64::min)
    }
}

impl Witness for AnchoredLipschitz {
    fn dim(&self) -> usize {
        self.rows.dim()
    }

    fn eval_sparse(&self, x: SparseView<'_>) -> f64 {
        AnchoredLipschitz::eval_sparse(self, x)
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        AnchoredLipschitz::eval(self, x)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnchorWire {
    idx: Vec<u32>,
    val: Vec<f64>,
    value: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnchoredWire {
    dim: usize,
    anchors: Vec<AnchorWire>,
    #[serde(rename = "L")]
    lipschitz: f64,
    metric: VectorMetric,
}

impl Serialize for AnchoredLipschitz {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.len() > MAX_SERIALIZED_ANCHORS {
            return Err(S::Error::custom(format!(
                "{} anchors exceed the serialization limit of {MAX_SERIALIZED_ANCHORS}",
                self.len()
            )));
        }
        let anchors = self
            .rows
            .iter()
            .zip(&self.values)
            .map(|(r, v)| AnchorWire { idx: r.idx.to_vec(), val: r.val.to_vec(), value: *v })
            .collect();
        AnchoredWire { dim: self.dim(), anchors, lipschitz: self.lipschitz, metric: self.metric }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AnchoredLipschitz {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = AnchoredWire::deserialize(d)?;
        if w.anchors.len() > MAX_SERIALIZED_ANCHORS {
            return Err(D::Error::custom("too many anchors"));
        }
        let mut rows = SparseRows::new(w.dim);
        let mut values = Vec::with_capacity(w.anchors.len());
        for a in &w.anchors {
            if a.idx.len() != a.val.len() {
                return Err(D::Error::custom("anchor idx and val lengths differ"));
            }
            rows.push(SparseView { idx: &a.idx, val: &a.val }).map_err(D::Error::custom)?;
            values.push(a.value);
        }
        Self::mcshane_extend(rows, values, w.lipschitz, w.metric).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows_from(dim: usize, pts: &[Vec<f64>]) -> SparseRows {
        let mut rows = SparseRows::new(dim);
        for p in pts {
            rows.push(SparseVec::from_dense(p).view()).unwrap();
        }
        rows
    }

    #[test]
    fn single_anchor_is_a_cone() {
        let f = AnchoredLipschitz::mcshane_extend(
            rows_from(2, &[vec![0.0, 0.0]]),
            vec![3.0],
            1.0,
            VectorMetric::Euclidean,
        )
        .unwrap();
        assert_eq!(f.eval(&[0.0, 0.0]).unwrap(), 3.0);
        assert_eq!(f.eval(&[3.0, 4.0]).unwrap(), 8.0);
    }

    #[test]
    fn midpoint_of_two_anchors() {
        let f = AnchoredLipschitz::mcshane_extend(
            rows_from(1, &[vec![0.0], vec![2.0]]),
            vec![0.0, 2.0],
            1.0,
            VectorMetric::Euclidean,
        )
        .unwrap();
        assert_eq!(f.eval(&[1.0]).unwrap(), 1.0);
    }

    #[test]
    fn infeasible_budget_reports_minimum() {
        let err = AnchoredLipschitz::mcshane_extend(
            rows_from(1, &[vec![0.0], vec![1.0]]),
            vec![0.0, 3.0],
            1.0,
            VectorMetric::Infinity,
        )
        .unwrap_err();
        match err {
            Error::BudgetTooSmall { given, minimal } => {
                assert_eq!(given, 1.0);
                assert_eq!(minimal, 3.0);
            }
            other => panic!("unexpected {other}"),
        }
        let f = AnchoredLipschitz::with_budget(
            rows_from(1, &[vec![0.0], vec![1.0]]),
            vec![0.0, 3.0],
            1.0,
            VectorMetric::Infinity,
        )
        .unwrap();
        assert_eq!(f.lipschitz(), 3.0);
    }

    #[test]
    fn repeated_anchor_rejected() {
        let r = AnchoredLipschitz::mcshane_extend(
            rows_from(1, &[vec![1.0], vec![1.0]]),
            vec![0.0, 0.0],
            1.0,
            VectorMetric::Euclidean,
        );
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn json_round_trip() {
        let f = AnchoredLipschitz::mcshane_extend(
            rows_from(3, &[vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 2.0]]),
            vec![-0.5, 0.5],
            1.0,
            VectorMetric::Infinity,
        )
        .unwrap();
        let json = serde_json::to_string(&f).unwrap();
        assert!(json.contains("\"L\":1.0"));
        let back: AnchoredLipschitz = serde_json::from_str(&json).unwrap();
        let x = [0.3, -0.2, 0.9];
        assert_eq!(back.eval(&x).unwrap(), f.eval(&x).unwrap());
    }
}
