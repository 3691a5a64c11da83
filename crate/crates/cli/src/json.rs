//! Minimal JSON writer with insertion-ordered keys and floats printed at 17
//! significant digits (`{:.16e}`), so identical reports are byte-identical
//! and round-trip through any JSON parser without loss.

use std::fmt::Write as _;

/// A JSON value with deterministic serialization.
#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Array(Vec<Json>),
    /// Keys serialize in insertion order.
    Object(Vec<(&'static str, Json)>),
}

impl std::fmt::Display for Json {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut out = String::new();
        self.write(&mut out);
        f.write_str(&out)
    }
}

impl Json {
    pub fn float_opt(v: Option<f64>) -> Json {
        v.map_or(Json::Null, Json::Float)
    }

    /// Serialized with a trailing newline, as emitted by the CLI.
    pub fn to_line(&self) -> String {
        let mut s = self.to_string();
        s.push('\n');
        s
    }

    fn write(&self, out: &mut String) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => {
                let _ = write!(out, "{i}");
            }
            Json::Float(x) => write_float(*x, out),
            Json::Str(s) => write_string(s, out),
            Json::Array(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    item.write(out);
                }
                out.push(']');
            }
            Json::Object(fields) => {
                out.push('{');
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    write_string(k, out);
                    out.push(':');
                    v.write(out);
                }
                out.push('}');
            }
        }
    }
}

/// 17 significant digits; non-finite values (unrepresentable in JSON) become null.
pub fn write_float(x: f64, out: &mut String) {
    if x.is_finite() {
        let _ = write!(out, "{x:.16e}");
    } else {
        out.push_str("null");
    }
}

/// The same 17-significant-digit rendering, for CSV cells.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn write_string(s: &str, out: &mut String) {
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serialization_is_ordered_and_stable() {
        let j = Json::Object(vec![
            ("b", Json::Float(0.5)),
            ("a", Json::Int(3)),
            ("s", Json::Str("x\"y".into())),
            ("arr", Json::Array(vec![Json::Bool(true), Json::Null])),
        ]);
        let s1 = j.to_string();
        let s2 = j.to_string();
        assert_eq!(s1, s2);
        assert_eq!(
            s1,
            "{\"b\":5.0000000000000000e-1,\"a\":3,\"s\":\"x\\\"y\",\"arr\":[true,null]}"
        );
    }

    #[test]
    fn floats_round_trip_through_serde_json() {
        for &x in &[0.1, 1.0 / 3.0, 2.47644543667097, 1e-300, -5.5e17] {
            let s = Json::Float(x).to_string();
            let back: f64 = serde_json::from_str(&s).unwrap();
            assert_eq!(back, x, "{s}");
        }
    }
}
