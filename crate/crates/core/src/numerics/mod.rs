//! Dense and sparse linear algebra: norms, spectral truncation and nets of
//! Euclidean balls.

mod ball_net;
mod mat;
mod norm;
mod sparse;
mod svd;

pub use ball_net::{ball_net, BallNet, MAX_BALL_NET_DIM};
pub use mat::Mat;
pub use norm::{norm, spectral_norm, NormKind, POWER_MAX_ITERS, POWER_REL_TOL};
pub(crate) use sparse::{DenseQuery, GroupedRows};
pub use sparse::{SparseRows, SparseVec, SparseView, SupportIndex, VectorMetric};
pub use svd::{svd, svd_truncate, Svd, Truncation, JACOBI_REL_TOL, TRUNCATION_TIE};
