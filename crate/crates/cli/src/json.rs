//! JSON documents written by `fit` and `infer`.
//!
//! Numbers use the shortest decimal that round-trips to the same double.
//! Infinite values are written as the strings `"inf"` and `"-inf"`, and NaN
//! as `null`.

use serde_json::{json, Map, Value};

use icselect::lasso::{LambdaRule, LassoFit, SelectionEvent};
use icselect::selective::InferenceReport;

pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        Value::Null
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| num(*x)).collect())
}

/// Inverse of [`num`].
pub fn read_num(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) if s == "inf" => Some(f64::INFINITY),
        Value::String(s) if s == "-inf" => Some(f64::NEG_INFINITY),
        Value::Null => Some(f64::NAN),
        _ => None,
    }
}

pub fn rule_name(rule: &LambdaRule) -> Value {
    match rule {
        LambdaRule::Fixed => json!({"rule": "fixed"}),
        LambdaRule::CSqrtN(c) => json!({"rule": "c_sqrt_n", "c": num(*c)}),
        LambdaRule::AicGrid(g) => json!({"rule": "aic", "grid": nums(g)}),
    }
}

fn kkt(fit: &LassoFit) -> Value {
    json!({
        "converged": fit.converged,
        "iterations": fit.iterations,
        "active_residual": num(fit.kkt_active_residual),
        "inactive_slack": num(fit.kkt_inactive_slack),
        "capped": fit.capped,
    })
}

pub fn fit_document(fit: &LassoFit, names: &[String]) -> Value {
    json!({
        "n": fit.n,
        "p": fit.beta.len(),
        "lambda": num(fit.penalty.lambda),
        "penalty": rule_name(&fit.penalty.rule),
        "names": names,
        "beta": nums(&fit.beta),
        "hazard": {
            "support": nums(fit.lambda0.support()),
            "jumps": nums(fit.lambda0.jumps()),
        },
        "objective": num(fit.objective),
        "mean_loglik": num(fit.mean_loglik),
        "score": nums(&fit.score),
        "kkt": kkt(fit),
    })
}

pub fn selection(sel: &SelectionEvent) -> Value {
    json!({
        "indices": sel.model.iter().map(|j| j + 1).collect::<Vec<_>>(),
        "signs": sel.signs,
    })
}

pub fn infer_document(
    fit: &LassoFit,
    sel: &SelectionEvent,
    report: &InferenceReport,
    names: &[String],
    epsilon: f64,
) -> Value {
    let coordinates: Vec<Value> = report
        .coordinates
        .iter()
        .map(|c| {
            json!({
                "name": names[c.index],
                "index": c.index + 1,
                "lasso": num(c.lasso),
                "one_step": num(c.one_step),
                "ci_low": num(c.ci_low),
                "ci_high": num(c.ci_high),
                "p_value": num(c.p_value),
                "vminus": num(c.vminus),
                "vplus": num(c.vplus),
                "sigma2": num(c.sigma2),
            })
        })
        .collect();
    let failures: Vec<Value> = report
        .failures
        .iter()
        .map(|(j, e)| json!({"name": names[*j], "index": j + 1, "error": e.tag(), "message": e.to_string()}))
        .collect();
    let opt = |v: Option<f64>| v.map_or(Value::Null, num);
    let mut doc = Map::new();
    doc.insert("n".into(), json!(fit.n));
    doc.insert("p".into(), json!(fit.beta.len()));
    doc.insert("lambda".into(), num(fit.penalty.lambda));
    doc.insert("penalty".into(), rule_name(&fit.penalty.rule));
    doc.insert("alpha".into(), num(report.alpha));
    doc.insert("info_onestep".into(), json!(report.method_onestep.name()));
    doc.insert("info_pivot".into(), json!(report.method_pivot.name()));
    doc.insert("epsilon".into(), num(epsilon));
    doc.insert("selection".into(), selection(sel));
    doc.insert("coordinates".into(), Value::Array(coordinates));
    doc.insert(
        "diagnostics".into(),
        json!({
            "kkt": kkt(fit),
            "min_eig_MM": {"onestep": opt(report.min_eig_mm_onestep), "pivot": opt(report.min_eig_mm_pivot)},
            "failures": failures,
        }),
    );
    if let Some(s) = &report.status {
        doc.insert("status".into(), json!(s));
    }
    Value::Object(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, f64::MAX, f64::INFINITY, f64::NEG_INFINITY] {
            let text = serde_json::to_string(&num(x)).unwrap();
            let back: Value = serde_json::from_str(&text).unwrap();
            assert_eq!(read_num(&back), Some(x));
        }
        assert!(read_num(&num(f64::NAN)).unwrap().is_nan());
    }
}
