use caplab::constructions::convex_instance;
use caplab::learner::{
    composed_loss, population_loss, project_frobenius_ball, sgd_run, uc_gap_experiment, SgdConfig, StepSize,
};
use caplab::numerics::Mat;
use caplab::Result;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn mat(r: usize, c: usize, lo: f64, hi: f64) -> impl Strategy<Value = Mat> {
    prop::collection::vec(lo..hi, r * c).prop_map(move |d| Mat::new(r, c, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn projection_lands_in_ball_and_is_idempotent(w in mat(3, 2, -5.0, 5.0), w0 in mat(3, 2, -1.0, 1.0), radius in 0.1f64..4.0) {
        let p = project_frobenius_ball(&w, &w0, radius).unwrap();
        prop_assert!(p.frobenius_distance(&w0).unwrap() <= radius * (1.0 + 1e-12));
        let pp = project_frobenius_ball(&p, &w0, radius).unwrap();
        prop_assert!(pp.frobenius_distance(&p).unwrap() <= 1e-12 * (1.0 + radius));
        if w.frobenius_distance(&w0).unwrap() <= radius {
            prop_assert_eq!(&p, &w);
        }
    }

    #[test]
    fn projection_is_nonexpansive(a in mat(2, 3, -4.0, 4.0), b in mat(2, 3, -4.0, 4.0), radius in 0.1f64..3.0) {
        let w0 = Mat::zeros(2, 3);
        let (pa, pb) = (project_frobenius_ball(&a, &w0, radius).unwrap(), project_frobenius_ball(&b, &w0, radius).unwrap());
        prop_assert!(pa.frobenius_distance(&pb).unwrap() <= a.frobenius_distance(&b).unwrap() + 1e-12);
    }

    #[test]
    fn regret_inequality_holds_for_linear_losses(seed in any::<u64>(), steps in 1usize..200, radius in 0.5f64..3.0) {
        let cfg = SgdConfig { w0: Mat::zeros(2, 2), radius, steps, eta: StepSize::Auto, lipschitz: 1.0, seed };
        let mut oracle = |_: &Mat, r: &mut ChaCha8Rng| -> Result<(f64, Mat)> {
            let mut v: Vec<f64> = (0..4).map(|_| r.random_range(-1.0..1.0)).collect();
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1.0);
            v.iter_mut().for_each(|a| *a /= n);
            Ok((0.0, Mat::new(2, 2, v)?))
        };
        let star = Mat::new(2, 2, vec![radius / 2.0, 0.0, 0.0, -radius / 2.0]).unwrap();
        let out = sgd_run(&cfg, &mut oracle, Some(&star)).unwrap();
        prop_assert!(out.regret_lhs <= out.regret_rhs + 1e-9);
        prop_assert!(out.feasible(&cfg.w0, radius));
        prop_assert!(out.trace.iter().all(|s| !s.exceeds_lipschitz));
    }
}

#[test]
fn sgd_on_distance_loss_meets_rate() {
    // f(W) = ‖W − C‖_F is 1-Lipschitz with minimum 0 at C inside the ball.
    let c = Mat::new(2, 2, vec![0.6, -0.3, 0.2, 0.5]).unwrap();
    let w0 = Mat::zeros(2, 2);
    for steps in [100, 1000, 10_000] {
        let cfg = SgdConfig { w0: w0.clone(), radius: 1.0, steps, eta: StepSize::Auto, lipschitz: 1.0, seed: 9 };
        let mut oracle = |w: &Mat, _: &mut ChaCha8Rng| -> Result<(f64, Mat)> {
            let d = w.sub(&c)?;
            let n = d.frobenius();
            Ok((n, if n > 0.0 { d.scaled(1.0 / n) } else { d }))
        };
        let out = sgd_run(&cfg, &mut oracle, Some(&c)).unwrap();
        let excess = out.w_hat.frobenius_distance(&c).unwrap();
        assert!(excess <= 1.0 / (steps as f64).sqrt(), "T={steps}: {excess}");
    }
}

#[test]
fn step_size_validation() {
    let mut cfg = SgdConfig { w0: Mat::zeros(1, 1), radius: 1.0, steps: 0, eta: StepSize::Auto, lipschitz: 1.0, seed: 0 };
    assert!(cfg.resolved_eta().is_err());
    cfg.steps = 4;
    assert_eq!(cfg.resolved_eta().unwrap(), 0.5);
    cfg.eta = StepSize::Fixed(-1.0);
    assert!(cfg.resolved_eta().is_err());
}

#[test]
fn composed_subgradient_matches_finite_differences() {
    let inst = convex_instance(4, 0.2, 0.5).unwrap();
    let pts = inst.dense_points();
    // A generic point away from kinks: the top labeling pushed a little further out.
    let w = inst.witness_matrix(inst.labelings() - 1).scaled(1.1);
    for x in &pts {
        let (loss, g) = composed_loss(&inst.witness, &w, x).unwrap();
        let h = 1e-7;
        for k in 0..w.as_slice().len() {
            let mut wp = w.clone();
            wp.as_mut_slice()[k] += h;
            let (lp, _) = composed_loss(&inst.witness, &wp, x).unwrap();
            assert!(((lp - loss) / h - g.as_slice()[k]).abs() <= 1e-5);
        }
    }
    let avg = population_loss(&inst.witness, &w, &pts).unwrap();
    let by_hand: f64 = pts.iter().map(|x| composed_loss(&inst.witness, &w, x).unwrap().0).sum::<f64>() / pts.len() as f64;
    assert!((avg - by_hand).abs() <= 1e-15);
}

#[test]
fn uniform_convergence_fails_on_small_samples() {
    let inst = convex_instance(10, 0.2, 0.5).unwrap();
    let rows = uc_gap_experiment(&inst, 4, &[1, 2, 3]).unwrap();
    for r in rows {
        assert!(r.gap >= 0.2 - 1e-12, "{r:?}");
        assert!(r.support <= 4);
    }
}
