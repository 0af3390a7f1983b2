//! Run reports: every number printed with 12 significant digits, infinities
//! and NaN as strings.

use serde::Serialize;
use serde_json::{json, Map, Value};

pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Serialize)]
pub struct ErrorDoc {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Map<String, Value>,
    pub results: Value,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorDoc>,
}

impl RunReport {
    pub fn render(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        round_value(&mut v);
        let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
        s.push('\n');
        s
    }
}

pub fn round(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

/// A float as a report value.
pub fn num(x: f64) -> Value {
    if x.is_nan() {
        json!("nan")
    } else if x == f64::INFINITY {
        json!("inf")
    } else if x == f64::NEG_INFINITY {
        json!("-inf")
    } else {
        json!(round(x))
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            *v = num(n.as_f64().expect("f64 number"));
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

/// `serde_json::to_value`, which cannot represent non-finite floats; callers
/// only pass documents with finite entries.
pub fn doc<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("document serializes")
}
