use serde::Serialize;
use serde_json::Value;

use crate::config::CheckName;

pub const REPORT_SCHEMA: &str = "palmlab-report-v1";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: CheckName,
    pub holds: bool,
    pub detail: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub schema: String,
    pub seed: u64,
    pub group: Vec<usize>,
    pub outcomes: usize,
    pub checks: Vec<CheckReport>,
    pub all_hold: bool,
}

impl SuiteReport {
    pub fn exit_code(&self) -> i32 {
        if self.all_hold {
            0
        } else {
            3
        }
    }

    pub fn check(&self, name: CheckName) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `x` rounded to 12 significant digits.
pub fn decimal12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// Rounds every non-integer number in `v` to 12 significant digits.
pub fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n
                .as_f64()
                .map(decimal12)
                .and_then(serde_json::Number::from_f64)
            {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}
