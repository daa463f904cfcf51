use caplab::numerics::{ball_net, norm, spectral_norm, svd, svd_truncate, Mat, NormKind, SparseVec, VectorMetric};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn to_na(w: &Mat) -> DMatrix<f64> {
    DMatrix::from_row_slice(w.rows(), w.cols(), w.as_slice())
}

fn oracle_singular_values(w: &Mat) -> Vec<f64> {
    let mut s: Vec<f64> = to_na(w).singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn matrix() -> impl Strategy<Value = Mat> {
    (1usize..7, 1usize..7).prop_flat_map(|(r, c)| {
        prop::collection::vec(-3.0f64..3.0, r * c).prop_map(move |d| Mat::new(r, c, d).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn singular_values_match_oracle(w in matrix()) {
        let ours = svd(&w).unwrap().s;
        let theirs = oracle_singular_values(&w);
        prop_assert_eq!(ours.len(), theirs.len());
        for (a, b) in ours.iter().zip(&theirs) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b), "{} vs {}", a, b);
        }
    }

    #[test]
    fn svd_reconstructs(w in matrix()) {
        let d = svd(&w).unwrap();
        let back = d.u.matmul(&Mat::diag(&d.s)).unwrap().matmul(&d.v.transpose()).unwrap();
        prop_assert!(back.frobenius_distance(&w).unwrap() <= 1e-9 * (1.0 + w.frobenius()));
    }

    #[test]
    fn spectral_norm_matches_oracle(w in matrix()) {
        let ours = spectral_norm(&w).unwrap();
        let theirs = oracle_singular_values(&w)[0];
        prop_assert!((ours - theirs).abs() <= 1e-6 * (1.0 + theirs), "{} vs {}", ours, theirs);
    }

    #[test]
    fn truncation_error_is_largest_dropped_value(w in matrix(), eps in 0.05f64..4.0) {
        let t = svd_truncate(&w, eps).unwrap();
        let residual = w.sub(&t.matrix).unwrap();
        let err = oracle_singular_values(&residual)[0];
        prop_assert!(err <= eps + 1e-9);
        prop_assert!((err - t.spectral_error).abs() <= 1e-8);
        let kept = oracle_singular_values(&w).iter().filter(|s| **s > eps + 1e-9).count();
        prop_assert!(t.rank >= kept && t.rank <= kept + 1);
    }

    #[test]
    fn sparse_distance_matches_dense(
        a in prop::collection::vec(prop_oneof![Just(0.0), -2.0f64..2.0], 8),
        b in prop::collection::vec(prop_oneof![Just(0.0), -2.0f64..2.0], 8),
    ) {
        let (sa, sb) = (SparseVec::from_dense(&a), SparseVec::from_dense(&b));
        for metric in [VectorMetric::Euclidean, VectorMetric::Infinity] {
            let got = sa.view().distance(&sb.view(), metric);
            let want = metric.distance(&a, &b);
            prop_assert!((got - want).abs() <= 1e-12);
        }
        prop_assert!((sa.view().dot(&sb.view()) - a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>()).abs() <= 1e-12);
    }
}

#[test]
fn vector_norms() {
    let v = Mat::column(&[3.0, -4.0]).unwrap();
    assert_eq!(norm(&v, NormKind::Euclidean).unwrap(), 5.0);
    assert_eq!(norm(&v, NormKind::Infinity).unwrap(), 4.0);
    assert!(norm(&Mat::identity(2), NormKind::Infinity).is_err());
}

#[test]
fn ball_net_is_packing_and_cover() {
    for r in 1..=3 {
        let net = ball_net(r, 1.0, 0.5).unwrap();
        assert!(net.min_separation() > 0.5 - 1e-12);
        assert!((net.len() as f64) <= net.size_bound());
        // Probe the ball on a grid.
        let steps = if r == 3 { 12 } else { 40 };
        let mut idx = vec![0usize; r];
        loop {
            let x: Vec<f64> = idx.iter().map(|&i| -1.0 + 2.0 * i as f64 / steps as f64).collect();
            if x.iter().map(|a| a * a).sum::<f64>() <= 1.0 {
                assert!(net.distance_to(&x) <= 0.5 + 1e-12, "{x:?} uncovered");
            }
            let mut k = 0;
            while k < r && idx[k] == steps {
                idx[k] = 0;
                k += 1;
            }
            if k == r {
                break;
            }
            idx[k] += 1;
        }
    }
}

#[test]
fn csv_round_trip() {
    let w = Mat::new(2, 3, vec![0.1, -2.5, 1e-300, 3.0, 0.0, 7.25]).unwrap();
    assert_eq!(Mat::from_csv(&w.to_csv()).unwrap(), w);
}
