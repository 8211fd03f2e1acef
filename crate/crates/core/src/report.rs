// SPDX-License-Identifier: Apache-2.0

//! Stable JSON output: sorted keys, floats cut to 6 significant digits,
//! a schema version on every document.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: &str = "1.0";

/// Rounds to 6 significant digits. Non-finite values pass through.
pub fn round6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

pub fn fmt6(x: f64) -> String {
    round6(x).to_string()
}

fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(0.0);
            serde_json::Number::from_f64(round6(x)).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(normalize).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, normalize(v))).collect()),
        other => other,
    }
}

/// Wraps `body` as `{"schema_version", "kind", <kind>: body}`, rounded.
pub fn document<T: Serialize>(kind: &str, body: &T) -> Result<Value> {
    let body = serde_json::to_value(body).map_err(|e| Error::invalid(format!("serializing {kind}: {e}")))?;
    let mut m = Map::new();
    m.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
    m.insert("kind".into(), Value::from(kind));
    m.insert(kind.into(), normalize(body));
    Ok(Value::Object(m))
}

/// Pretty JSON text with a trailing newline.
pub fn to_json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("a Value always serializes");
    s.push('\n');
    s
}

pub fn render<T: Serialize>(kind: &str, body: &T) -> Result<String> {
    Ok(to_json_string(&document(kind, body)?))
}
