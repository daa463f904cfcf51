//! Closed-form sample-complexity evaluators.
//!
//! None of them take the input dimension or the width: the bounds depend only
//! on norm budgets, Lipschitz constants and the accuracy. Universal constants
//! are the explicit `c` argument.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::real_string;

/// Values above this are reported as `+inf`; `log_value` stays finite.
pub const OVERFLOW_LIMIT: f64 = 1e308;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FormulaId {
    #[serde(rename = "shatter-lower")]
    ShatterLower,
    #[serde(rename = "exp-class")]
    ExpClass,
    #[serde(rename = "deep-general")]
    DeepGeneral,
    #[serde(rename = "sgd-sample")]
    SgdSample,
    #[serde(rename = "smooth-one-layer")]
    SmoothOneLayer,
    #[serde(rename = "deep-elementwise")]
    DeepElementwise,
}

impl FormulaId {
    pub const ALL: [FormulaId; 6] = [
        FormulaId::ShatterLower,
        FormulaId::ExpClass,
        FormulaId::DeepGeneral,
        FormulaId::SgdSample,
        FormulaId::SmoothOneLayer,
        FormulaId::DeepElementwise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FormulaId::ShatterLower => "shatter-lower",
            FormulaId::ExpClass => "exp-class",
            FormulaId::DeepGeneral => "deep-general",
            FormulaId::SgdSample => "sgd-sample",
            FormulaId::SmoothOneLayer => "smooth-one-layer",
            FormulaId::DeepElementwise => "deep-elementwise",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundInput {
    Real(#[serde(with = "real_string")] f64),
    List(#[serde(with = "real_string::vec")] Vec<f64>),
}

/// One evaluated formula with its inputs echoed back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub formula_id: FormulaId,
    pub inputs: BTreeMap<String, BoundInput>,
    #[serde(with = "real_string")]
    pub value: f64,
    /// Natural log of the value, finite even when `value` overflows.
    #[serde(with = "real_string")]
    pub log_value: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl BoundReport {
    fn new(id: FormulaId, reals: &[(&str, f64)], value: f64, log_value: f64) -> Self {
        let inputs = reals.iter().map(|(k, v)| (k.to_string(), BoundInput::Real(*v))).collect();
        let value = if value > OVERFLOW_LIMIT { f64::INFINITY } else { value };
        BoundReport { formula_id: id, inputs, value, log_value, notes: Vec::new() }
    }

    fn with_list(mut self, key: &str, v: &[f64]) -> Self {
        self.inputs.insert(key.into(), BoundInput::List(v.to_vec()));
        self
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} > 0 violated ({name} = {v})")))
    }
}

fn at_least_one(name: &str, v: f64) -> Result<()> {
    if v >= 1.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} >= 1 violated ({name} = {v})")))
    }
}

fn unit_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("0 < eps <= 1 violated (eps = {eps})")))
    }
}

/// `exp(c L² B² / ε²)` points can be shattered.
///
/// ```
/// let r = caplab::bounds::shatter_lower_bound(8.0, 8.0, 1.0, 1.0).unwrap();
/// assert_eq!(r.log_value, 4096.0);
/// assert_eq!(r.value, f64::INFINITY);
/// ```
pub fn shatter_lower_bound(b: f64, l: f64, eps: f64, c: f64) -> Result<BoundReport> {
    at_least_one("B", b)?;
    at_least_one("L", l)?;
    unit_eps(eps)?;
    positive("c", c)?;
    let ratio = l * l * b * b / (128.0 * eps * eps);
    if !(ratio >= 20.0) {
        return Err(invalid(format!("L^2 B^2 / (128 eps^2) >= 20 violated (value {ratio})")));
    }
    let log = c * l * l * b * b / (eps * eps);
    Ok(BoundReport::new(
        FormulaId::ShatterLower,
        &[("B", b), ("L", l), ("eps", eps), ("c", c)],
        log.exp(),
        log,
    ))
}

/// `(LB/ε)^(c L² B² / ε²)` samples suffice for any class of `L`-Lipschitz
/// functions of `W x`.
pub fn exp_class_sample_bound(b: f64, l: f64, eps: f64, c: f64) -> Result<BoundReport> {
    at_least_one("B", b)?;
    at_least_one("L", l)?;
    unit_eps(eps)?;
    positive("c", c)?;
    let base = l * b / eps;
    if !(base >= 1.0) {
        return Err(invalid(format!("L B / eps >= 1 violated (value {base})")));
    }
    let exponent = c * l * l * b * b / (eps * eps);
    Ok(BoundReport::new(
        FormulaId::ExpClass,
        &[("B", b), ("L", l), ("eps", eps), ("c", c)],
        base.powf(exponent),
        exponent * base.ln(),
    ))
}

/// The exp-class bound with `L = ∏ S_j`.
pub fn deep_general_bound(b: f64, s_list: &[f64], eps: f64, c: f64) -> Result<BoundReport> {
    if s_list.is_empty() {
        return Err(invalid("S list must be nonempty"));
    }
    for s in s_list {
        positive("S_j", *s)?;
    }
    at_least_one("B", b)?;
    if !(b / eps >= 1.0) {
        return Err(invalid(format!("B / eps >= 1 violated (value {})", b / eps)));
    }
    let l: f64 = s_list.iter().product();
    let inner = exp_class_sample_bound(b, l, eps, c)?;
    let mut r = BoundReport::new(FormulaId::DeepGeneral, &[("B", b), ("eps", eps), ("c", c)], inner.value, inner.log_value)
        .with_list("S", s_list);
    r.inputs.insert("L".into(), BoundInput::Real(l));
    Ok(r)
}

/// `B² L² / ε²` samples for projected SGD.
pub fn sgd_sample_bound(b: f64, l: f64, eps: f64) -> Result<BoundReport> {
    positive("B", b)?;
    positive("L", l)?;
    positive("eps", eps)?;
    let v = b * b * l * l / (eps * eps);
    Ok(BoundReport::new(FormulaId::SgdSample, &[("B", b), ("L", l), ("eps", eps)], v, v.ln()))
}

/// Inputs of [`smooth_one_layer_bound`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothOneLayer {
    pub b: f64,
    pub b_x: f64,
    #[serde(rename = "B")]
    pub big_b: f64,
    #[serde(rename = "B0")]
    pub b0: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub mu: f64,
    pub eps: f64,
    pub c: f64,
}

/// `(c/ε²)(1 + b b_x (L B₀ + (μ + L) B (1 + B₀ b_x)))²`, without the
/// logarithmic factors.
///
/// ```
/// use caplab::bounds::{smooth_one_layer_bound, SmoothOneLayer};
/// let p = SmoothOneLayer { b: 1.0, b_x: 1.0, big_b: 2.0, b0: 0.0, l: 1.0, mu: 0.0, eps: 1.0, c: 1.0 };
/// assert_eq!(smooth_one_layer_bound(&p).unwrap().value, 9.0);
/// ```
pub fn smooth_one_layer_bound(p: &SmoothOneLayer) -> Result<BoundReport> {
    positive("b", p.b)?;
    positive("b_x", p.b_x)?;
    positive("B", p.big_b)?;
    positive("L", p.l)?;
    positive("eps", p.eps)?;
    positive("c", p.c)?;
    for (name, v) in [("B0", p.b0), ("mu", p.mu)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(invalid(format!("{name} >= 0 violated ({name} = {v})")));
        }
    }
    if !(p.big_b * p.b_x >= 2.0) {
        return Err(invalid(format!("B b_x >= 2 violated (value {})", p.big_b * p.b_x)));
    }
    let inner = 1.0 + p.b * p.b_x * (p.l * p.b0 + (p.mu + p.l) * p.big_b * (1.0 + p.b0 * p.b_x));
    let v = p.c / (p.eps * p.eps) * inner * inner;
    let mut r = BoundReport::new(
        FormulaId::SmoothOneLayer,
        &[("b", p.b), ("b_x", p.b_x), ("B", p.big_b), ("B0", p.b0), ("L", p.l), ("mu", p.mu), ("eps", p.eps), ("c", p.c)],
        v,
        v.ln(),
    );
    r.notes.push("logarithmic factors in m, B, L, b_x omitted".into());
    Ok(r)
}

/// Inputs of [`deep_elementwise_bound`]; `s` and `b_list` hold `S_1..S_{k−1}`
/// and `B_1..B_{k−1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeepElementwise {
    pub k: usize,
    pub b: f64,
    pub b_x: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "S")]
    pub s: Vec<f64>,
    #[serde(rename = "B")]
    pub b_list: Vec<f64>,
    pub eps: f64,
    pub m: f64,
    pub c: f64,
}

/// `c (k L^{k−1} b R_{k−2} log^{3(k−1)/2}(m) ∏ B_i)² / ε²` with
/// `R_{k−2} = b_x L^{k−2} ∏_{i ≤ k−2} S_i`.
pub fn deep_elementwise_bound(p: &DeepElementwise) -> Result<BoundReport> {
    if p.k < 2 {
        return Err(invalid(format!("k >= 2 violated (k = {})", p.k)));
    }
    let depth = p.k - 1;
    if p.s.len() != depth || p.b_list.len() != depth {
        return Err(invalid(format!(
            "k = {} needs {depth} entries in S and in B, got {} and {}",
            p.k,
            p.s.len(),
            p.b_list.len()
        )));
    }
    at_least_one("L", p.l)?;
    for s in &p.s {
        at_least_one("S_i", *s)?;
    }
    for b in &p.b_list {
        positive("B_i", *b)?;
    }
    positive("b", p.b)?;
    positive("b_x", p.b_x)?;
    positive("eps", p.eps)?;
    positive("c", p.c)?;
    at_least_one("m", p.m)?;
    let k = p.k as f64;
    let r = p.b_x * p.l.powi(p.k as i32 - 2) * p.s[..p.k - 2].iter().product::<f64>();
    let log_m = p.m.ln().powf(1.5 * (k - 1.0));
    let inner = k * p.l.powi(p.k as i32 - 1) * p.b * r * log_m * p.b_list.iter().product::<f64>();
    let v = p.c * inner * inner / (p.eps * p.eps);
    Ok(BoundReport::new(
        FormulaId::DeepElementwise,
        &[("k", k), ("b", p.b), ("b_x", p.b_x), ("L", p.l), ("eps", p.eps), ("m", p.m), ("c", p.c)],
        v,
        v.ln(),
    )
    .with_list("S", &p.s)
    .with_list("B", &p.b_list))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shatter_precondition_message() {
        let err = shatter_lower_bound(1.0, 1.0, 1.0, 1.0).unwrap_err().to_string();
        assert!(err.contains("L^2 B^2 / (128 eps^2) >= 20"), "{err}");
    }

    #[test]
    fn exp_class_examples() {
        assert_eq!(exp_class_sample_bound(1.0, 1.0, 1.0, 1.0).unwrap().value, 1.0);
        assert_eq!(exp_class_sample_bound(2.0, 1.0, 1.0, 1.0).unwrap().value, 16.0);
    }

    #[test]
    fn overflow_reports_infinity() {
        let r = exp_class_sample_bound(100.0, 1.0, 0.1, 1.0).unwrap();
        assert_eq!(r.value, f64::INFINITY);
        assert!(r.log_value.is_finite());
        let back: BoundReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn sgd_examples() {
        assert_eq!(sgd_sample_bound(1.0, 1.0, 1.0).unwrap().value, 1.0);
        assert_eq!(sgd_sample_bound(1.0, 2.0, 0.5).unwrap().value, 16.0);
    }

    #[test]
    fn elementwise_list_lengths() {
        let mut p = DeepElementwise {
            k: 2,
            b: 1.0,
            b_x: 1.0,
            l: 1.0,
            s: vec![1.0],
            b_list: vec![1.0],
            eps: 1.0,
            m: std::f64::consts::E,
            c: 1.0,
        };
        assert!((deep_elementwise_bound(&p).unwrap().value - 4.0).abs() < 1e-12);
        p.s.push(1.0);
        assert!(deep_elementwise_bound(&p).is_err());
    }
}
