//! Rendering helpers: deterministic JSON values for big floats, and the
//! human-oriented table format.

use rug::Float;
use serde_json::Value;
use thetalift::numctx::BigComplex;

/// Significant digits carried into JSON output.  Fixed (rather than tied
/// to the working precision) so that output layout is stable.
const DIGITS: usize = 24;

/// A big float as a JSON number with a fixed number of significant digits.
pub fn float_json(x: &Float) -> Value {
    if !x.is_finite() {
        return Value::String(x.to_string());
    }
    let s = x.to_string_radix(10, Some(DIGITS));
    match s.parse::<serde_json::Number>() {
        Ok(n) => Value::Number(n),
        Err(_) => Value::String(s),
    }
}

/// {"re": ..., "im": ...} for a complex value.
pub fn complex_json(z: &BigComplex) -> Value {
    serde_json::json!({
        "re": float_json(z.re()),
        "im": float_json(z.im()),
    })
}

/// Indented key/value rendering of a JSON document.  Human-oriented;
/// the layout carries no stability promise.
pub fn table(v: &Value) -> String {
    let mut out = String::new();
    render(v, 0, &mut out);
    out
}

fn render(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                if is_scalar(val) {
                    out.push_str(&format!("{pad}{k}: {}\n", scalar(val)));
                } else {
                    out.push_str(&format!("{pad}{k}:\n"));
                    render(val, indent + 1, out);
                }
            }
        }
        Value::Array(items) => {
            if items.iter().all(is_scalar) {
                let row: Vec<String> = items.iter().map(scalar).collect();
                out.push_str(&format!("{pad}[{}]\n", row.join(", ")));
            } else {
                for item in items {
                    render(item, indent, out);
                    if matches!(item, Value::Object(_)) {
                        out.push('\n');
                    }
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other))),
    }
}

fn is_scalar(v: &Value) -> bool {
    match v {
        Value::Array(items) => items.iter().all(|x| !matches!(x, Value::Object(_) | Value::Array(_))),
        Value::Object(_) => false,
        _ => true,
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) => {
            let row: Vec<String> = items.iter().map(scalar).collect();
            format!("[{}]", row.join(", "))
        }
        other => other.to_string(),
    }
}
