//! JSON text with every float written to 17 significant digits.

use h4bp::io::fmt17;
use serde_json::Value;

pub fn json17(v: &Value) -> String {
    let mut s = String::new();
    write(v, 0, &mut s);
    s.push('\n');
    s
}

fn indent(n: usize, s: &mut String) {
    for _ in 0..n {
        s.push_str("  ");
    }
}

fn write(v: &Value, depth: usize, s: &mut String) {
    match v {
        Value::Null => s.push_str("null"),
        Value::Bool(b) => s.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let f = n.as_f64().unwrap_or(f64::NAN);
                if f.is_finite() {
                    s.push_str(&fmt17(f));
                } else {
                    s.push_str("null");
                }
            } else {
                s.push_str(&n.to_string());
            }
        }
        Value::String(t) => s.push_str(&Value::String(t.clone()).to_string()),
        Value::Array(a) => {
            if a.is_empty() {
                s.push_str("[]");
                return;
            }
            s.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                indent(depth + 1, s);
                write(x, depth + 1, s);
                if i + 1 < a.len() {
                    s.push(',');
                }
                s.push('\n');
            }
            indent(depth, s);
            s.push(']');
        }
        Value::Object(m) => {
            if m.is_empty() {
                s.push_str("{}");
                return;
            }
            s.push_str("{\n");
            for (i, (k, x)) in m.iter().enumerate() {
                indent(depth + 1, s);
                s.push_str(&Value::String(k.clone()).to_string());
                s.push_str(": ");
                write(x, depth + 1, s);
                if i + 1 < m.len() {
                    s.push(',');
                }
                s.push('\n');
            }
            indent(depth, s);
            s.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        let v = serde_json::json!({"a": 0.1, "b": [1, -2.5], "c": "x"});
        let s = json17(&v);
        assert!(s.contains("1.0000000000000001e-1"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.1));
        assert_eq!(back["b"][0].as_i64(), Some(1));
    }
}
