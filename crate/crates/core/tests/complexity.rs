use caplab::complexity::{
    cover_bound, dudley_bound, empirical_cover, rademacher_linear_closed_form, rademacher_mc, CoverFormula, CoverKind,
    DudleyGrid, FunctionClass, FunctionTable, SupStrategy,
};
use caplab::constructions::convex_instance;
use proptest::prelude::*;

/// `E_σ max_f (1/m) Σ σ_i f_i` by summing over all `2^m` sign vectors.
fn exact_rademacher(rows: &[Vec<f64>]) -> f64 {
    let m = rows[0].len();
    let mut total = 0.0;
    for mask in 0..1usize << m {
        let best = rows
            .iter()
            .map(|r| r.iter().enumerate().map(|(i, v)| if mask >> i & 1 == 1 { *v } else { -*v }).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        total += best / m as f64;
    }
    total / (1usize << m) as f64
}

fn table() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..7, 1usize..9)
        .prop_flat_map(|(m, n)| prop::collection::vec(prop::collection::vec(-1.0f64..1.0, m), n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn finite_class_estimate_brackets_exact_value(rows in table(), seed in any::<u64>()) {
        let exact = exact_rademacher(&rows);
        let t = FunctionTable::from_rows(rows).unwrap();
        let est = rademacher_mc(&FunctionClass::Finite(&t), 4000, seed, SupStrategy::EnumerateWitnesses).unwrap();
        prop_assert!((est.mean - exact).abs() <= 5.0 * est.stderr + 1e-12, "{} ± {} vs {}", est.mean, est.stderr, exact);
        prop_assert!(!est.is_lower_estimate);
    }

    #[test]
    fn greedy_cover_is_a_cover(rows in table(), eps in 0.0f64..1.5) {
        let t = FunctionTable::from_rows(rows).unwrap();
        let c = empirical_cover(&t, eps).unwrap();
        prop_assert!(c.radius <= eps);
        for k in 0..t.len() {
            let d = c.centers.iter().map(|&j| t.distance(j, k)).fold(f64::INFINITY, f64::min);
            prop_assert!(d <= eps);
        }
        // Centers picked after the first were uncovered when chosen, so they are eps-separated.
        for (a, &i) in c.centers.iter().enumerate() {
            for &j in &c.centers[a + 1..] {
                prop_assert!(t.distance(i, j) > eps);
            }
        }
    }

    #[test]
    fn cover_formulas_shrink_with_scale(kind_ix in 0usize..5, e1 in 0.05f64..2.0, e2 in 0.05f64..2.0) {
        let kind = CoverKind::ALL[kind_ix];
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let base = CoverFormula::new(kind, &[("B", 4.0), ("b_x", 1.0), ("r", 2.0), ("L", 1.5), ("k", 3.0)]);
        let a = cover_bound(&base.at_scale(lo)).unwrap();
        let b = cover_bound(&base.at_scale(hi)).unwrap();
        prop_assert!(a >= b, "{}: N({}) = {} < N({}) = {}", kind.name(), lo, a, hi, b);
    }
}

/// Smallest cover by exhaustive subset search, for tiny tables.
fn optimal_cover_size(t: &FunctionTable, eps: f64) -> usize {
    let n = t.len();
    (1usize..1 << n)
        .filter(|s| (0..n).all(|k| (0..n).any(|j| s >> j & 1 == 1 && t.distance(j, k) <= eps)))
        .map(|s| s.count_ones() as usize)
        .min()
        .unwrap()
}

#[test]
fn greedy_cover_is_never_smaller_than_optimum() {
    use rand::{Rng, SeedableRng};
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let n = r.random_range(1..=9);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let t = FunctionTable::from_rows(rows).unwrap();
        for eps in [0.1, 0.3, 0.6] {
            assert!(empirical_cover(&t, eps).unwrap().len() >= optimal_cover_size(&t, eps));
        }
    }
}

#[test]
fn linear_closed_form_matches_sign_enumeration() {
    let pts = vec![vec![1.0, 0.0, 0.5], vec![0.2, -1.0, 0.0], vec![0.3, 0.3, 0.3], vec![-0.6, 0.1, 0.9]];
    let m = pts.len();
    let mut exact = 0.0;
    for mask in 0..1usize << m {
        let mut acc = [0.0; 3];
        for (i, x) in pts.iter().enumerate() {
            let s = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
            acc.iter_mut().zip(x).for_each(|(a, v)| *a += s * v);
        }
        exact += 2.0 / m as f64 * acc.iter().map(|a| a * a).sum::<f64>().sqrt();
    }
    exact /= (1usize << m) as f64;
    let est = rademacher_linear_closed_form(&pts, 2.0, 20_000, 3).unwrap();
    assert!((est.mean - exact).abs() <= 4.0 * est.stderr, "{} ± {} vs {exact}", est.mean, est.stderr);
}

#[test]
fn instance_estimate_is_the_margin() {
    // Every sign pattern is realized with outputs ±eps, so the sup is exactly eps.
    let inst = convex_instance(5, 0.2, 0.5).unwrap();
    let est = rademacher_mc(&FunctionClass::Instance(&inst), 500, 1, SupStrategy::EnumerateWitnesses).unwrap();
    assert!((est.mean - 0.2).abs() <= 1e-12);
}

#[test]
fn mismatched_strategy_is_rejected() {
    let t = FunctionTable::from_rows(vec![vec![1.0]]).unwrap();
    assert!(rademacher_mc(&FunctionClass::Finite(&t), 10, 0, SupStrategy::LinearClosedForm).is_err());
    assert!(rademacher_mc(&FunctionClass::Finite(&t), 0, 0, SupStrategy::EnumerateWitnesses).is_err());
}

#[test]
fn dudley_constant_entropy_has_closed_form() {
    let grid = DudleyGrid::Explicit(vec![0.1, 0.5, 0.9]);
    let (range, m) = (2.0, 144.0);
    let r = dudley_bound(&|_| 4.0, range, m, &grid).unwrap();
    let want = [0.1f64, 0.5, 0.9].map(|e| 4.0 * e + 12.0 / 12.0 * 2.0 * (range - e));
    let best = want.iter().copied().fold(f64::INFINITY, f64::min);
    assert!((r.value - best).abs() <= 1e-12);
    assert_eq!(r.argmin, 0.1);
}

#[test]
fn dudley_inverse_square_entropy() {
    // √log N(τ) = a/τ integrates to a ln(R/ε).
    let (a, range, m) = (3.0, 1.0, 1e4);
    let grid = DudleyGrid::Explicit(vec![0.05]);
    let r = dudley_bound(&|t| (a / t) * (a / t), range, m, &grid).unwrap();
    let want = 4.0 * 0.05 + 12.0 / 100.0 * a * (range / 0.05f64).ln();
    assert!((r.value - want).abs() <= 1e-3 * want, "{} vs {want}", r.value);
}
