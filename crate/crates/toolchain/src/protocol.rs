//! Test-executable wire protocol.
//!
//! Input files carry one hex float per line. Output starts with a header
//! line, `SCALAR`, `VECTOR <n>` or `STRING <bytes>`, followed by the
//! payload: one hex float, `n` whitespace-separated hex floats, or exactly
//! `bytes` bytes of text.

use vbisect_core::domain::{ResultKind, TestValue};

use crate::hexfloat;

pub fn encode_input(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 24);
    for v in values {
        out.push_str(&hexfloat::format(*v));
        out.push('\n');
    }
    out
}

pub fn decode_input(text: &str) -> Result<Vec<f64>, String> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| hexfloat::parse(l).map_err(|e| e.to_string()))
        .collect()
}

pub fn encode_output(value: &TestValue) -> Vec<u8> {
    let mut out = String::new();
    match value {
        TestValue::Scalar(x) => {
            out.push_str("SCALAR\n");
            out.push_str(&hexfloat::format(*x));
            out.push('\n');
        }
        TestValue::Vector(v) => {
            out.push_str(&format!("VECTOR {}\n", v.len()));
            out.push_str(&encode_input(v));
        }
        TestValue::Text(s) => {
            out.push_str(&format!("STRING {}\n", s.len()));
            out.push_str(s);
        }
    }
    out.into_bytes()
}

pub fn decode_output(bytes: &[u8]) -> Result<TestValue, String> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or("missing header line")?;
    let header = std::str::from_utf8(&bytes[..newline]).map_err(|_| "header is not UTF-8")?;
    let payload = &bytes[newline + 1..];
    let mut parts = header.split_whitespace();
    let tag = parts.next().ok_or("empty header line")?;
    let arg = parts.next();
    if parts.next().is_some() {
        return Err(format!("unexpected header {header:?}"));
    }
    let text = || std::str::from_utf8(payload).map_err(|_| "payload is not UTF-8".to_string());
    match (tag, arg) {
        ("SCALAR", None) => {
            let words: Vec<&str> = text()?.split_whitespace().collect();
            match words.as_slice() {
                [w] => hexfloat::parse(w).map(TestValue::Scalar).map_err(|e| e.to_string()),
                _ => Err(format!("SCALAR expects one value, got {}", words.len())),
            }
        }
        ("VECTOR", Some(n)) => {
            let n: usize = n.parse().map_err(|_| format!("bad vector length {n:?}"))?;
            let values = text()?
                .split_whitespace()
                .map(|w| hexfloat::parse(w).map_err(|e| e.to_string()))
                .collect::<Result<Vec<f64>, String>>()?;
            if values.len() != n {
                return Err(format!("VECTOR {n} carried {} values", values.len()));
            }
            Ok(TestValue::Vector(values))
        }
        ("STRING", Some(n)) => {
            let n: usize = n.parse().map_err(|_| format!("bad string length {n:?}"))?;
            if payload.len() < n {
                return Err(format!("STRING {n} carried only {} bytes", payload.len()));
            }
            let (body, rest) = payload.split_at(n);
            if rest.iter().any(|b| !b.is_ascii_whitespace()) {
                return Err(format!("{} bytes after STRING payload", rest.len()));
            }
            String::from_utf8(body.to_vec())
                .map(TestValue::Text)
                .map_err(|_| "STRING payload is not UTF-8".into())
        }
        _ => Err(format!("unknown header {header:?}")),
    }
}

/// Join the results of a chunked test: scalars become a vector, vectors
/// concatenate, text concatenates.
pub fn concatenate(kind: ResultKind, parts: Vec<TestValue>) -> Result<TestValue, String> {
    if let Some(bad) = parts.iter().find(|p| p.kind() != kind) {
        return Err(format!("expected a {kind:?} result, got {:?}", bad.kind()));
    }
    if parts.len() == 1 {
        return Ok(parts.into_iter().next().expect("one part"));
    }
    Ok(match kind {
        ResultKind::Scalar | ResultKind::Vector => TestValue::Vector(
            parts
                .into_iter()
                .flat_map(|p| match p {
                    TestValue::Scalar(x) => vec![x],
                    TestValue::Vector(v) => v,
                    TestValue::Text(_) => unreachable!("kind checked"),
                })
                .collect(),
        ),
        ResultKind::Text => TestValue::Text(
            parts
                .into_iter()
                .map(|p| match p {
                    TestValue::Text(s) => s,
                    _ => unreachable!("kind checked"),
                })
                .collect(),
        ),
    })
}
