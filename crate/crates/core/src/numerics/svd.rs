//! Singular value decomposition by one-sided Jacobi rotations, and the
//! spectral truncation built on it.

use super::mat::Mat;
use crate::error::{invalid, Error, Result};

pub const JACOBI_REL_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Singular values within this distance of the threshold count as dropped.
pub const TRUNCATION_TIE: f64 = 1e-12;

/// Thin SVD `W = U diag(s) Vᵀ` with `s` sorted in descending order.
#[derive(Clone, Debug)]
pub struct Svd {
    /// `rows × k` with orthonormal columns (columns for zero singular values are zero).
    pub u: Mat,
    pub s: Vec<f64>,
    /// `cols × k` with orthonormal columns.
    pub v: Mat,
}

pub fn svd(w: &Mat) -> Result<Svd> {
    if !w.is_finite() {
        return Err(invalid("matrix has non-finite entries"));
    }
    if w.rows() >= w.cols() {
        jacobi(w)
    } else {
        let t = jacobi(&w.transpose())?;
        Ok(Svd { u: t.v, s: t.s, v: t.u })
    }
}

/// Hestenes one-sided Jacobi on a tall matrix (`rows >= cols`).
fn jacobi(w: &Mat) -> Result<Svd> {
    let (n, k) = w.shape();
    // Work on columns stored contiguously.
    let mut a: Vec<Vec<f64>> = (0..k).map(|j| (0..n).map(|i| w.get(i, j)).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut e = vec![0.0; k];
            e[j] = 1.0;
            e
        })
        .collect();

    let mut converged = k < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..k - 1 {
            for q in p + 1..k {
                let alpha: f64 = a[p].iter().map(|x| x * x).sum();
                let beta: f64 = a[q].iter().map(|x| x * x).sum();
                let gamma: f64 = a[p].iter().zip(&a[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= JACOBI_REL_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::NumericalFailure(format!(
            "Jacobi SVD did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<(f64, usize)> =
        a.iter().enumerate().map(|(j, col)| (col.iter().map(|x| x * x).sum::<f64>().sqrt(), j)).collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));

    let mut u = Mat::zeros(n, k);
    let mut vm = Mat::zeros(k, k);
    let mut s = Vec::with_capacity(k);
    for (out, (sigma, j)) in order.into_iter().enumerate() {
        s.push(sigma);
        if sigma > 0.0 {
            for i in 0..n {
                u.set(i, out, a[j][i] / sigma);
            }
        }
        for i in 0..k {
            vm.set(i, out, v[j][i]);
        }
    }
    Ok(Svd { u, s, v: vm })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Result of [`svd_truncate`].
#[derive(Clone, Debug)]
pub struct Truncation {
    /// `U Ŝ Vᵀ` with every singular value `<= eps` zeroed.
    pub matrix: Mat,
    pub rank: usize,
    /// Largest dropped singular value, which is the spectral error `‖W − W̃‖`.
    pub spectral_error: f64,
    pub singular_values: Vec<f64>,
}

/// Zeroes singular values at or below `eps`.
pub fn svd_truncate(w: &Mat, eps: f64) -> Result<Truncation> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(invalid(format!("truncation threshold must be positive, got {eps}")));
    }
    let dec = svd(w)?;
    let keep = dec.s.iter().take_while(|s| **s - eps > TRUNCATION_TIE).count();
    let mut out = Mat::zeros(w.rows(), w.cols());
    for l in 0..keep {
        let sigma = dec.s[l];
        for i in 0..w.rows() {
            let ui = dec.u.get(i, l) * sigma;
            if ui == 0.0 {
                continue;
            }
            let row = &mut out.as_mut_slice()[i * w.cols()..(i + 1) * w.cols()];
            for (j, r) in row.iter_mut().enumerate() {
                *r += ui * dec.v.get(j, l);
            }
        }
    }
    Ok(Truncation {
        matrix: out,
        rank: keep,
        spectral_error: dec.s.get(keep).copied().unwrap_or(0.0),
        singular_values: dec.s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_truncation() {
        let t = svd_truncate(&Mat::diag(&[2.0, 0.1]), 0.5).unwrap();
        assert_eq!(t.rank, 1);
        assert!((t.matrix.get(0, 0) - 2.0).abs() < 1e-15);
        assert_eq!(t.matrix.get(1, 1), 0.0);
        assert!((t.spectral_error - 0.1).abs() < 1e-15);
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let t = svd_truncate(&Mat::zeros(3, 4), 0.1).unwrap();
        assert_eq!(t.rank, 0);
        assert!(t.matrix.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn tie_at_threshold_is_dropped() {
        let t = svd_truncate(&Mat::diag(&[1.0, 0.5]), 0.5).unwrap();
        assert_eq!(t.rank, 1);
    }

    #[test]
    fn wide_matrix_reconstructs() {
        let w = Mat::from_rows(&[vec![1.0, 2.0, 3.0], vec![-1.0, 0.5, 2.0]]).unwrap();
        let d = svd(&w).unwrap();
        let mut rec = Mat::zeros(2, 3);
        for l in 0..2 {
            for i in 0..2 {
                for j in 0..3 {
                    let v = rec.get(i, j) + d.u.get(i, l) * d.s[l] * d.v.get(j, l);
                    rec.set(i, j, v);
                }
            }
        }
        assert!(rec.frobenius_distance(&w).unwrap() < 1e-12);
        assert!(svd_truncate(&w, 0.0).is_err());
    }
}
