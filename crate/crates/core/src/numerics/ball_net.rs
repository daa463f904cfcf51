//! ε-nets of Euclidean balls by greedy maximal packing.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const MAX_BALL_NET_DIM: usize = 4;
const PRIMES: [u32; MAX_BALL_NET_DIM] = [2, 3, 5, 7];

/// Centers of an ε-separated subset of `{x ∈ ℝ^r : ‖x‖ ≤ B}` that also covers it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BallNet {
    pub radius: f64,
    pub dim: usize,
    pub resolution: f64,
    pub centers: Vec<Vec<f64>>,
}

impl BallNet {
    /// Volume bound `(1 + 2B/ε)^r` on the size of any ε-packing of the ball.
    pub fn size_bound(&self) -> f64 {
        (1.0 + 2.0 * self.radius / self.resolution).powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Distance from `x` to the nearest center.
    pub fn distance_to(&self, x: &[f64]) -> f64 {
        self.centers.iter().map(|c| dist(c, x)).fold(f64::INFINITY, f64::min)
    }

    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.centers.iter().enumerate() {
            for b in &self.centers[i + 1..] {
                best = best.min(dist(a, b));
            }
        }
        best
    }
}

/// Greedy packing over a Halton candidate stream, followed by hole filling:
/// any point of the ball found farther than `eps` from every center is added,
/// which keeps the packing property and pushes the set toward maximality.
pub fn ball_net(r: usize, radius: f64, eps: f64) -> Result<BallNet> {
    if r == 0 {
        return Err(invalid("ball dimension must be positive"));
    }
    if r > MAX_BALL_NET_DIM {
        return Err(Error::CapacityExceeded(format!(
            "ball nets are limited to dimension {MAX_BALL_NET_DIM}, got {r}"
        )));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(invalid(format!("resolution must be positive, got {eps}")));
    }
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(invalid(format!("radius must be nonnegative, got {radius}")));
    }

    let mut centers: Vec<Vec<f64>> = vec![vec![0.0; r]];
    let net = |centers: Vec<Vec<f64>>| BallNet { radius, dim: r, resolution: eps, centers };
    if radius == 0.0 {
        return Ok(net(centers));
    }

    let volume_bound = (1.0 + 2.0 * radius / eps).powi(r as i32);
    let n_candidates = (volume_bound * 48.0).clamp(2048.0, 200_000.0) as usize;
    let candidates: Vec<Vec<f64>> = (1..)
        .map(|k| halton(k, r).into_iter().map(|u| (2.0 * u - 1.0) * radius).collect::<Vec<_>>())
        .filter(|p| norm(p) <= radius)
        .take(n_candidates)
        .collect();

    for p in &candidates {
        if nearest(&centers, p).0 >= eps {
            centers.push(p.clone());
        }
    }

    for _round in 0..32 {
        let mut added = false;
        for p in &candidates {
            if nearest(&centers, p).0 < 0.5 * eps {
                continue;
            }
            let hole = climb(&centers, p, radius, eps);
            if nearest(&centers, &hole).0 > eps {
                centers.push(hole);
                added = true;
            }
        }
        if !added {
            break;
        }
    }
    Ok(net(centers))
}

/// Projected ascent on the distance to the nearest center.
fn climb(centers: &[Vec<f64>], start: &[f64], radius: f64, eps: f64) -> Vec<f64> {
    let mut p = start.to_vec();
    let mut best = p.clone();
    let mut best_d = nearest(centers, &p).0;
    let mut step = 0.25 * eps;
    for _ in 0..80 {
        let (d, k) = nearest(centers, &p);
        if d == 0.0 {
            break;
        }
        let c = &centers[k];
        for (x, ci) in p.iter_mut().zip(c) {
            *x += step * (*x - ci) / d;
        }
        let n = norm(&p);
        if n > radius {
            p.iter_mut().for_each(|x| *x *= radius / n);
        }
        let nd = nearest(centers, &p).0;
        if nd > best_d {
            best_d = nd;
            best.clone_from(&p);
        } else {
            step *= 0.7;
        }
    }
    best
}

fn nearest(centers: &[Vec<f64>], p: &[f64]) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for (k, c) in centers.iter().enumerate() {
        let d = dist(c, p);
        if d < best.0 {
            best = (d, k);
        }
    }
    best
}

fn halton(mut k: u64, r: usize) -> Vec<f64> {
    let start = k;
    PRIMES[..r]
        .iter()
        .map(|&base| {
            k = start;
            let b = base as u64;
            let (mut f, mut out) = (1.0, 0.0);
            while k > 0 {
                f /= base as f64;
                out += f * (k % b) as f64;
                k /= b;
            }
            out
        })
        .collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_ball_has_origin_only() {
        let net = ball_net(2, 0.0, 0.1).unwrap();
        assert_eq!(net.centers, vec![vec![0.0, 0.0]]);
    }

    #[test]
    fn guards() {
        assert!(matches!(ball_net(5, 1.0, 0.5), Err(Error::CapacityExceeded(_))));
        assert!(matches!(ball_net(2, 1.0, 0.0), Err(Error::InvalidInput(_))));
        assert!(matches!(ball_net(2, 1.0, -1.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn interval_net() {
        let net = ball_net(1, 1.0, 0.5).unwrap();
        assert!(net.len() as f64 <= 5.0);
        assert!(net.min_separation() >= 0.5);
        for k in 0..=2000 {
            let x = -1.0 + k as f64 / 1000.0;
            assert!(net.distance_to(&[x]) <= 0.5, "x = {x}");
        }
    }
}
