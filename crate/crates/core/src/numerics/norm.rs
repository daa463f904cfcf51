use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mat::{euclidean, Mat};
use crate::error::{invalid, Error, Result};
use crate::rng;

/// Which norm [`norm`] computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    #[serde(rename = "frobenius")]
    Frobenius,
    #[serde(rename = "spectral")]
    Spectral,
    #[serde(rename = "euclidean-vector")]
    Euclidean,
    #[serde(rename = "infinity")]
    Infinity,
}

pub const POWER_MAX_ITERS: usize = 10_000;
pub const POWER_REL_TOL: f64 = 1e-10;
const POWER_SEED: u64 = 0x5eed_0f_5bec;

/// Norm of `m`. Vector norms require a single row or column.
pub fn norm(m: &Mat, kind: NormKind) -> Result<f64> {
    if !m.is_finite() {
        return Err(invalid("matrix has non-finite entries"));
    }
    match kind {
        NormKind::Frobenius => Ok(m.frobenius()),
        NormKind::Spectral => spectral_norm(m),
        NormKind::Euclidean | NormKind::Infinity => {
            if m.rows() != 1 && m.cols() != 1 {
                return Err(invalid(format!(
                    "{kind:?} norm needs a vector, got a {}x{} matrix",
                    m.rows(),
                    m.cols()
                )));
            }
            Ok(match kind {
                NormKind::Euclidean => euclidean(m.as_slice()),
                _ => m.as_slice().iter().fold(0.0, |a, v| a.max(v.abs())),
            })
        }
    }
}

/// Largest singular value by power iteration on `WᵀW`.
///
/// The start vector is drawn from a fixed seed; the estimate is the
/// Rayleigh quotient `‖W v‖` for the current unit iterate.
pub fn spectral_norm(w: &Mat) -> Result<f64> {
    let d = w.cols();
    let mut r = rng::stream(POWER_SEED, d as u64);
    let mut v: Vec<f64> = (0..d).map(|_| r.random::<f64>() - 0.5).collect();
    let nv = euclidean(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut prev = f64::NAN;
    for _ in 0..POWER_MAX_ITERS {
        let wv = w.matvec_unchecked(&v);
        let sigma = euclidean(&wv);
        if sigma == 0.0 {
            return Ok(0.0);
        }
        let mut next = w.tr_matvec(&wv)?;
        let nn = euclidean(&next);
        if nn == 0.0 {
            return Ok(sigma);
        }
        next.iter_mut().for_each(|x| *x /= nn);
        v = next;
        if (sigma - prev).abs() <= POWER_REL_TOL * sigma {
            return Ok(euclidean(&w.matvec_unchecked(&v)).max(sigma));
        }
        prev = sigma;
    }
    Err(Error::NumericalFailure(format!(
        "power iteration did not converge in {POWER_MAX_ITERS} iterations"
    )))
}
