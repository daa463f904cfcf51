use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Witness;
use crate::error::{ensure_dim, invalid, Result};
use crate::numerics::{SparseRows, SparseVec, SparseView, SupportIndex, VectorMetric};

/// `f(x) = max(max_k ⟨a_k, x⟩ + c_k, κ) + shift`.
#[derive(Clone, Debug)]
pub struct MaxAffine {
    pieces: SparseRows,
    offsets: Vec<f64>,
    kappa: f64,
    shift: f64,
    index: SupportIndex,
    /// Piece ids by descending offset, then ascending id.
    by_offset: Vec<u32>,
}

impl MaxAffine {
    pub fn new(pieces: SparseRows, offsets: Vec<f64>, kappa: f64, shift: f64) -> Result<Self> {
        ensure_dim(pieces.len(), offsets.len())?;
        if !kappa.is_finite() || !shift.is_finite() || offsets.iter().any(|c| !c.is_finite()) {
            return Err(invalid("max-affine constants must be finite"));
        }
        if pieces.iter().any(|p| p.val.iter().any(|v| !v.is_finite())) {
            return Err(invalid("max-affine directions must be finite"));
        }
        let mut by_offset: Vec<u32> = (0..pieces.len() as u32).collect();
        by_offset.sort_by(|a, b| offsets[*b as usize].total_cmp(&offsets[*a as usize]).then(a.cmp(b)));
        let index = SupportIndex::build(&pieces);
        Ok(MaxAffine { pieces, offsets, kappa, shift, index, by_offset })
    }

    pub fn dim(&self) -> usize {
        self.pieces.dim()
    }

    pub fn pieces(&self) -> &SparseRows {
        &self.pieces
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Largest piece value and the lowest piece id attaining it.
    fn best_piece(&self, x: SparseView<'_>) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        let mut offer = |v: f64, k: usize| match best {
            Some((bv, bk)) if v < bv || (v == bv && k > bk) => {}
            _ => best = Some((v, k)),
        };
        match self.index.touching(x) {
            None => {
                for (k, p) in self.pieces.iter().enumerate() {
                    offer(p.dot(&x) + self.offsets[k], k);
                }
            }
            Some(touch) => {
                for &k in &touch {
                    let k = k as usize;
                    offer(self.pieces.row(k).dot(&x) + self.offsets[k], k);
                }
                if let Some(&k) = self.by_offset.iter().find(|k| touch.binary_search(k).is_err()) {
                    offer(self.offsets[k as usize], k as usize);
                }
            }
        }
        best
    }

    pub fn eval_sparse(&self, x: SparseView<'_>) -> f64 {
        let inner = self.best_piece(x).map_or(self.kappa, |(v, _)| v.max(self.kappa));
        inner + self.shift
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        ensure_dim(self.dim(), x.len())?;
        let inner = self
            .pieces
            .iter()
            .zip(&self.offsets)
            .map(|(p, c)| p.dot_dense(x) + c)
            .fold(self.kappa, f64::max);
        Ok(inner + self.shift)
    }

    /// Active piece at `x`: lowest id among the maximizers, with the constant
    /// piece ranked after every affine one. `None` means the constant piece.
    pub fn active_piece(&self, x: SparseView<'_>) -> Option<usize> {
        match self.best_piece(x) {
            Some((v, k)) if v >= self.kappa => Some(k),
            _ => None,
        }
    }

    /// A subgradient at `x` (the active piece's direction, or zero).
    pub fn subgradient(&self, x: SparseView<'_>) -> SparseVec {
        match self.active_piece(x) {
            Some(k) => self.pieces.row(k).to_owned(self.dim()),
            None => SparseVec { dim: self.dim(), idx: Vec::new(), val: Vec::new() },
        }
    }

    /// `max_k ‖a_k‖_*`, the Lipschitz constant with respect to `metric`.
    pub fn lipschitz_bound(&self, metric: VectorMetric) -> f64 {
        self.pieces.iter().map(|p| metric.dual_norm(p.val)).fold(0.0, f64::max)
    }
}

impl Witness for MaxAffine {
    fn dim(&self) -> usize {
        self.pieces.dim()
    }

    fn eval_sparse(&self, x: SparseView<'_>) -> f64 {
        MaxAffine::eval_sparse(self, x)
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        MaxAffine::eval(self, x)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PieceWire {
    idx: Vec<u32>,
    val: Vec<f64>,
    offset: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaxAffineWire {
    dim: usize,
    pieces: Vec<PieceWire>,
    kappa: f64,
    shift: f64,
}

impl Serialize for MaxAffine {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pieces = self
            .pieces
            .iter()
            .zip(&self.offsets)
            .map(|(p, c)| PieceWire { idx: p.idx.to_vec(), val: p.val.to_vec(), offset: *c })
            .collect();
        MaxAffineWire { dim: self.dim(), pieces, kappa: self.kappa, shift: self.shift }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MaxAffine {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = MaxAffineWire::deserialize(d)?;
        let mut rows = SparseRows::new(w.dim);
        let mut offsets = Vec::with_capacity(w.pieces.len());
        for p in &w.pieces {
            if p.idx.len() != p.val.len() {
                return Err(D::Error::custom("piece idx and val lengths differ"));
            }
            rows.push(SparseView { idx: &p.idx, val: &p.val }).map_err(D::Error::custom)?;
            offsets.push(p.offset);
        }
        MaxAffine::new(rows, offsets, w.kappa, w.shift).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MaxAffine {
        let mut rows = SparseRows::new(3);
        rows.push(SparseVec::from_pairs(3, vec![(0, 1.0)]).unwrap().view()).unwrap();
        rows.push(SparseVec::from_pairs(3, vec![(1, -2.0), (2, 0.5)]).unwrap().view()).unwrap();
        rows.push(SparseVec::from_pairs(3, vec![(0, 1.0)]).unwrap().view()).unwrap();
        MaxAffine::new(rows, vec![0.0, 0.25, 0.0], 0.1, -1.0).unwrap()
    }

    #[test]
    fn sparse_and_dense_agree() {
        let f = sample();
        for x in [[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.3, 0.1, -4.0]] {
            let s = f.eval_sparse(SparseVec::from_dense(&x).view());
            assert_eq!(s, f.eval(&x).unwrap());
        }
        assert!(f.eval(&[1.0]).is_err());
    }

    #[test]
    fn ties_go_to_lowest_piece_then_constant() {
        let f = sample();
        let x = SparseVec::from_dense(&[2.0, 0.0, 0.0]);
        assert_eq!(f.active_piece(x.view()), Some(0));
        let origin = SparseVec::from_dense(&[0.0, 0.0, 0.0]);
        assert_eq!(f.active_piece(origin.view()), Some(1));
        let low = SparseVec::from_dense(&[-5.0, 5.0, 0.0]);
        assert_eq!(f.active_piece(low.view()), None);
        assert!(f.subgradient(low.view()).idx.is_empty());
    }

    #[test]
    fn lipschitz_bound_uses_dual_norm() {
        let f = sample();
        assert_eq!(f.lipschitz_bound(VectorMetric::Infinity), 2.5);
        assert_eq!(f.lipschitz_bound(VectorMetric::Euclidean), 4.25f64.sqrt());
    }

    #[test]
    fn json_round_trip() {
        let f = sample();
        let back: MaxAffine = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back.eval(&[0.3, 0.2, 0.1]).unwrap(), f.eval(&[0.3, 0.2, 0.1]).unwrap());
        assert_eq!(back.kappa(), 0.1);
    }
}
