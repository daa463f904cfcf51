use caplab::bounds::{
    deep_elementwise_bound, deep_general_bound, exp_class_sample_bound, sgd_sample_bound, shatter_lower_bound,
    smooth_one_layer_bound, BoundReport, DeepElementwise, SmoothOneLayer,
};
use proptest::prelude::*;

fn round_trip(r: &BoundReport) {
    let text = serde_json::to_string(r).unwrap();
    let back: BoundReport = serde_json::from_str(&text).unwrap();
    assert_eq!(&back, r, "{text}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sample_bounds_decrease_in_eps(b in 1.0f64..50.0, l in 1.0f64..10.0, e1 in 0.01f64..1.0, e2 in 0.01f64..1.0) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(sgd_sample_bound(b, l, lo).unwrap().value >= sgd_sample_bound(b, l, hi).unwrap().value);
        if l * b / lo >= 1.0 && l * b / hi >= 1.0 {
            let a = exp_class_sample_bound(b, l, lo, 1.0).unwrap();
            let c = exp_class_sample_bound(b, l, hi, 1.0).unwrap();
            prop_assert!(a.log_value >= c.log_value);
        }
    }

    #[test]
    fn log_value_tracks_value(b in 1.0f64..3.0, l in 1.0f64..2.0, eps in 0.5f64..1.0) {
        let r = exp_class_sample_bound(b, l, eps, 0.5).unwrap();
        prop_assert!(r.value.is_finite());
        prop_assert!((r.value.ln() - r.log_value).abs() <= 1e-9 * (1.0 + r.log_value.abs()));
        round_trip(&r);
    }

    #[test]
    fn smooth_bound_grows_with_b0(b0a in 0.0f64..5.0, b0b in 0.0f64..5.0, mu in 0.0f64..3.0) {
        let (lo, hi) = if b0a <= b0b { (b0a, b0b) } else { (b0b, b0a) };
        let p = |b0| SmoothOneLayer { b: 1.0, b_x: 1.0, big_b: 3.0, b0, l: 1.0, mu, eps: 0.5, c: 1.0 };
        prop_assert!(smooth_one_layer_bound(&p(lo)).unwrap().value <= smooth_one_layer_bound(&p(hi)).unwrap().value);
    }

    #[test]
    fn deep_general_is_exp_class_at_product(s in prop::collection::vec(1.0f64..2.0, 1..4), b in 1.0f64..4.0) {
        let l: f64 = s.iter().product();
        let a = deep_general_bound(b, &s, 0.5, 0.1).unwrap();
        let e = exp_class_sample_bound(b, l, 0.5, 0.1).unwrap();
        prop_assert_eq!(a.log_value, e.log_value);
        round_trip(&a);
    }
}

#[test]
fn overflow_is_reported_as_infinity() {
    let r = shatter_lower_bound(16.0, 4.0, 0.5, 1.0).unwrap();
    assert_eq!(r.log_value, 16384.0);
    assert_eq!(r.value, f64::INFINITY);
    round_trip(&r);
    let text = serde_json::to_string(&r).unwrap();
    assert!(text.contains("\"inf\""), "{text}");
}

#[test]
fn preconditions_are_enforced() {
    assert!(shatter_lower_bound(8.0, 1.0, 0.5, 1.0).is_err());
    assert!(exp_class_sample_bound(0.5, 1.0, 0.5, 1.0).is_err());
    assert!(sgd_sample_bound(1.0, 1.0, 0.0).is_err());
    let p = SmoothOneLayer { b: 1.0, b_x: 1.0, big_b: 1.0, b0: 0.0, l: 1.0, mu: 0.0, eps: 1.0, c: 1.0 };
    assert!(smooth_one_layer_bound(&p).is_err());
}

#[test]
fn deep_elementwise_hand_value() {
    // k = 2: c (2 L b b_x log^{3/2}(m) B_1)² / ε².
    let m = std::f64::consts::E;
    let p = DeepElementwise { k: 2, b: 1.0, b_x: 2.0, l: 1.0, s: vec![1.0], b_list: vec![3.0], eps: 1.0, m, c: 1.0 };
    let r = deep_elementwise_bound(&p).unwrap();
    assert!((r.value - 144.0).abs() <= 1e-9);
    round_trip(&r);
    let short = DeepElementwise { s: vec![], ..p };
    assert!(deep_elementwise_bound(&short).is_err());
}
