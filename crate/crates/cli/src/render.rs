use hingelab_core::json::round_floats;
use serde_json::Value;

const DIGITS: usize = 12;

pub fn json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(&round_floats(v, DIGITS)).expect("values serialize");
    s.push('\n');
    s
}

/// Indented `key: value` lines; flat arrays of scalars stay on one line.
pub fn text(v: &Value) -> String {
    let mut out = String::new();
    write_value(&round_floats(v, DIGITS), 0, &mut out);
    out
}

fn atom(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(xs) if xs.iter().all(|x| !x.is_array() && !x.is_object()) => {
            let parts: Vec<String> = xs.iter().filter_map(atom).collect();
            Some(format!("({})", parts.join(", ")))
        }
        _ => None,
    }
}

fn write_value(v: &Value, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                match atom(x) {
                    Some(a) => out.push_str(&format!("{pad}{k}: {a}\n")),
                    None => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        write_value(x, depth + 1, out);
                    }
                }
            }
        }
        Value::Array(xs) => {
            for (i, x) in xs.iter().enumerate() {
                match atom(x) {
                    Some(a) => out.push_str(&format!("{pad}[{i}] {a}\n")),
                    None => {
                        out.push_str(&format!("{pad}[{i}]\n"));
                        write_value(x, depth + 1, out);
                    }
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", atom(other).unwrap_or_default())),
    }
}
