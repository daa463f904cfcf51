//! Sparse vectors and row sets.
//!
//! The shattering constructions place their encoded points in spaces of
//! dimension `2^m + m` with two nonzeros each, so witness functions store
//! their anchors and affine pieces in compressed-row form.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Metric on vectors used by witness functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VectorMetric {
    #[serde(rename = "euclidean-vector")]
    Euclidean,
    #[serde(rename = "infinity")]
    Infinity,
}

impl VectorMetric {
    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            VectorMetric::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            VectorMetric::Infinity => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            VectorMetric::Euclidean => {
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
            }
            VectorMetric::Infinity => a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs())),
        }
    }

    /// Norm of the dual space (ℓ2 is self-dual, ℓ∞ pairs with ℓ1).
    pub fn dual_norm(self, v: &[f64]) -> f64 {
        match self {
            VectorMetric::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            VectorMetric::Infinity => v.iter().map(|x| x.abs()).sum(),
        }
    }

    /// Distance between two vectors with disjoint supports, from their norms.
    #[inline]
    fn disjoint_distance(self, na: f64, nb: f64) -> f64 {
        match self {
            VectorMetric::Euclidean => na.hypot(nb),
            VectorMetric::Infinity => na.max(nb),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            VectorMetric::Euclidean => "euclidean-vector",
            VectorMetric::Infinity => "infinity",
        }
    }
}

/// Borrowed sparse vector; indices strictly increasing.
#[derive(Clone, Copy, Debug)]
pub struct SparseView<'a> {
    pub idx: &'a [u32],
    pub val: &'a [f64],
}

impl<'a> SparseView<'a> {
    pub fn nnz(&self) -> usize {
        self.idx.len()
    }

    pub fn norm(&self, metric: VectorMetric) -> f64 {
        metric.norm(self.val)
    }

    pub fn dot_dense(&self, x: &[f64]) -> f64 {
        self.idx.iter().zip(self.val).map(|(i, v)| v * x[*i as usize]).sum()
    }

    pub fn dot(&self, other: &SparseView<'_>) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.idx.len() && j < other.idx.len() {
            match self.idx[i].cmp(&other.idx[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.val[i] * other.val[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// Exact merge-based distance.
    pub fn distance(&self, other: &SparseView<'_>, metric: VectorMetric) -> f64 {
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0f64;
        let mut push = |d: f64| match metric {
            VectorMetric::Euclidean => acc += d * d,
            VectorMetric::Infinity => acc = acc.max(d.abs()),
        };
        while i < self.idx.len() || j < other.idx.len() {
            let a = self.idx.get(i).copied().unwrap_or(u32::MAX);
            let b = other.idx.get(j).copied().unwrap_or(u32::MAX);
            if a < b {
                push(self.val[i]);
                i += 1;
            } else if b < a {
                push(other.val[j]);
                j += 1;
            } else {
                push(self.val[i] - other.val[j]);
                i += 1;
                j += 1;
            }
        }
        match metric {
            VectorMetric::Euclidean => acc.sqrt(),
            VectorMetric::Infinity => acc,
        }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (i, v) in self.idx.iter().zip(self.val) {
            out[*i as usize] = *v;
        }
        out
    }

    pub fn to_owned(&self, dim: usize) -> SparseVec {
        SparseVec { dim, idx: self.idx.to_vec(), val: self.val.to_vec() }
    }
}

/// Owned sparse vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseVec {
    pub dim: usize,
    pub idx: Vec<u32>,
    pub val: Vec<f64>,
}

impl SparseVec {
    /// Keeps the nonzero entries of `x`.
    pub fn from_dense(x: &[f64]) -> Self {
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for (i, v) in x.iter().enumerate() {
            if *v != 0.0 {
                idx.push(i as u32);
                val.push(*v);
            }
        }
        SparseVec { dim: x.len(), idx, val }
    }

    /// Builds from `(index, value)` pairs; repeated indices are summed.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(usize, f64)>) -> Result<Self> {
        pairs.sort_by_key(|p| p.0);
        let mut idx: Vec<u32> = Vec::with_capacity(pairs.len());
        let mut val: Vec<f64> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            if i >= dim {
                return Err(invalid(format!("index {i} out of range for dimension {dim}")));
            }
            if !v.is_finite() {
                return Err(invalid(format!("non-finite value at index {i}")));
            }
            if idx.last() == Some(&(i as u32)) {
                *val.last_mut().unwrap() += v;
            } else {
                idx.push(i as u32);
                val.push(v);
            }
        }
        Ok(SparseVec { dim, idx, val })
    }

    pub fn view(&self) -> SparseView<'_> {
        SparseView { idx: &self.idx, val: &self.val }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        self.view().to_dense(self.dim)
    }

    pub fn scaled(&self, s: f64) -> SparseVec {
        SparseVec { dim: self.dim, idx: self.idx.clone(), val: self.val.iter().map(|v| v * s).collect() }
    }
}

/// Compressed sparse rows sharing one ambient dimension.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseRows {
    dim: usize,
    ptr: Vec<usize>,
    idx: Vec<u32>,
    val: Vec<f64>,
}

impl SparseRows {
    pub fn new(dim: usize) -> Self {
        SparseRows { dim, ptr: vec![0], idx: Vec::new(), val: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ptr.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }

    pub fn push(&mut self, row: SparseView<'_>) -> Result<()> {
        if let Some(&last) = row.idx.last() {
            if last as usize >= self.dim {
                return Err(invalid(format!("index {last} out of range for dimension {}", self.dim)));
            }
        }
        if row.idx.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("sparse indices must be strictly increasing"));
        }
        self.idx.extend_from_slice(row.idx);
        self.val.extend_from_slice(row.val);
        self.ptr.push(self.idx.len());
        Ok(())
    }

    #[inline]
    pub fn row(&self, k: usize) -> SparseView<'_> {
        let (a, b) = (self.ptr[k], self.ptr[k + 1]);
        SparseView { idx: &self.idx[a..b], val: &self.val[a..b] }
    }

    pub fn iter(&self) -> impl Iterator<Item = SparseView<'_>> + '_ {
        (0..self.len()).map(move |k| self.row(k))
    }
}

/// Inverted index from coordinates to the rows whose support contains them.
#[derive(Clone, Debug, Default)]
pub struct SupportIndex {
    postings: Vec<Vec<u32>>,
    rows: usize,
}

impl SupportIndex {
    pub fn build(rows: &SparseRows) -> Self {
        let mut postings = vec![Vec::new(); rows.dim()];
        for (k, row) in rows.iter().enumerate() {
            for &i in row.idx {
                postings[i as usize].push(k as u32);
            }
        }
        SupportIndex { postings, rows: rows.len() }
    }

    /// Rows sharing at least one coordinate with `q`, sorted and deduplicated.
    ///
    /// Returns `None` when the posting lists are long enough that a full scan
    /// is cheaper.
    pub fn touching(&self, q: SparseView<'_>) -> Option<Vec<u32>> {
        let total: usize = q
            .idx
            .iter()
            .map(|i| self.postings.get(*i as usize).map_or(0, Vec::len))
            .sum();
        if total >= self.rows {
            return None;
        }
        let mut out = Vec::with_capacity(total);
        for i in q.idx {
            if let Some(p) = self.postings.get(*i as usize) {
                out.extend_from_slice(p);
            }
        }
        out.sort_unstable();
        out.dedup();
        Some(out)
    }
}

/// Rows partitioned into groups, each ordered by ascending norm.
///
/// Answers "closest row of group g to a query" exactly: rows sharing support
/// with the query are measured directly, and among the remaining rows the
/// distance depends only on the two norms, so the smallest-norm one wins.
#[derive(Clone, Debug)]
pub(crate) struct GroupedRows {
    pub metric: VectorMetric,
    pub index: SupportIndex,
    pub norms: Vec<f64>,
    pub group_of: Vec<u32>,
    /// Row ids of each group, by ascending norm then id.
    pub members: Vec<Vec<u32>>,
}

impl GroupedRows {
    pub fn build(rows: &SparseRows, group_of: Vec<u32>, groups: usize, metric: VectorMetric) -> Self {
        let norms: Vec<f64> = rows.iter().map(|r| r.norm(metric)).collect();
        let mut members = vec![Vec::new(); groups];
        for (k, g) in group_of.iter().enumerate() {
            members[*g as usize].push(k as u32);
        }
        for m in &mut members {
            m.sort_by(|a, b| norms[*a as usize].total_cmp(&norms[*b as usize]).then(a.cmp(b)));
        }
        GroupedRows { metric, index: SupportIndex::build(rows), norms, group_of, members }
    }

    /// Minimum distance from `q` to each group; `exclude` drops one row.
    pub fn group_min_distances(
        &self,
        rows: &SparseRows,
        q: SparseView<'_>,
        exclude: Option<u32>,
    ) -> Vec<f64> {
        let groups = self.members.len();
        let mut best = vec![f64::INFINITY; groups];
        match self.index.touching(q) {
            None => {
                for k in 0..rows.len() as u32 {
                    if Some(k) == exclude {
                        continue;
                    }
                    let d = q.distance(&rows.row(k as usize), self.metric);
                    let g = self.group_of[k as usize] as usize;
                    if d < best[g] {
                        best[g] = d;
                    }
                }
            }
            Some(touch) => {
                for &k in &touch {
                    if Some(k) == exclude {
                        continue;
                    }
                    let d = q.distance(&rows.row(k as usize), self.metric);
                    let g = self.group_of[k as usize] as usize;
                    if d < best[g] {
                        best[g] = d;
                    }
                }
                let qn = q.norm(self.metric);
                for (g, members) in self.members.iter().enumerate() {
                    let first_free = members
                        .iter()
                        .find(|k| Some(**k) != exclude && touch.binary_search(k).is_err());
                    if let Some(&k) = first_free {
                        let d = self.metric.disjoint_distance(qn, self.norms[k as usize]);
                        if d < best[g] {
                            best[g] = d;
                        }
                    }
                }
            }
        }
        best
    }
}

/// Dense query prepared for repeated distance evaluations against sparse rows
/// with at most `depth` nonzeros each.
pub(crate) struct DenseQuery<'a> {
    x: &'a [f64],
    metric: VectorMetric,
    sq: f64,
    /// Largest `|x_j|` values with their coordinates, descending.
    top: Vec<(f64, u32)>,
}

impl<'a> DenseQuery<'a> {
    pub fn new(x: &'a [f64], metric: VectorMetric, depth: usize) -> Self {
        let sq = x.iter().map(|v| v * v).sum();
        let mut top = Vec::new();
        if metric == VectorMetric::Infinity {
            let mut all: Vec<(f64, u32)> =
                x.iter().enumerate().map(|(j, v)| (v.abs(), j as u32)).collect();
            let keep = (depth + 1).min(all.len());
            if keep < all.len() {
                all.select_nth_unstable_by(keep, |a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
                all.truncate(keep);
            }
            all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            top = all;
        }
        DenseQuery { x, metric, sq, top }
    }

    pub fn distance(&self, row: SparseView<'_>) -> f64 {
        match self.metric {
            VectorMetric::Euclidean => {
                let (mut on, mut covered) = (0.0, 0.0);
                for (i, a) in row.idx.iter().zip(row.val) {
                    let xi = self.x[*i as usize];
                    on += (xi - a) * (xi - a);
                    covered += xi * xi;
                }
                let mut off = self.sq - covered;
                // When nearly all of x sits on the row support the subtraction is
                // pure rounding, and its square root would be far from zero.
                if off <= 1e-10 * self.sq {
                    let mut k = 0;
                    off = 0.0;
                    for (j, v) in self.x.iter().enumerate() {
                        if k < row.idx.len() && row.idx[k] as usize == j {
                            k += 1;
                        } else {
                            off += v * v;
                        }
                    }
                }
                (on + off.max(0.0)).sqrt()
            }
            VectorMetric::Infinity => {
                let mut d = self
                    .top
                    .iter()
                    .find(|(_, j)| row.idx.binary_search(j).is_err())
                    .map_or(0.0, |t| t.0);
                for (i, a) in row.idx.iter().zip(row.val) {
                    d = d.max((self.x[*i as usize] - a).abs());
                }
                d
            }
        }
    }
}
