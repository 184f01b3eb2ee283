//! Artifact writing. Floats go out with 17 significant digits so that a
//! re-run with the same inputs reproduces every file byte for byte.

use serde::Serialize;
use serde_json::{Number, Value};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

fn reformat(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            if x.is_finite() {
                fmt_f64(x).parse::<Number>().map_or(Value::Null, Value::Number)
            } else {
                Value::Null
            }
        }
        Value::Array(a) => Value::Array(a.into_iter().map(reformat).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, reformat(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with every float at 17 significant digits.
pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let v = reformat(serde_json::to_value(value)?);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

/// Record of one run. Everything except `wall_clock_seconds` is a function
/// of the inputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Value,
    pub input_hash: String,
    pub outputs: Vec<OutputEntry>,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
}

/// Collects files written into one output directory.
pub struct Writer {
    dir: PathBuf,
    pub entries: Vec<OutputEntry>,
}

impl Writer {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Writer { dir: dir.to_path_buf(), entries: Vec::new() })
    }

    pub fn write(&mut self, name: &str, text: &str) -> std::io::Result<()> {
        std::fs::write(self.dir.join(name), text)?;
        self.entries.push(OutputEntry { path: name.to_string(), sha256: sha256_hex(text.as_bytes()) });
        Ok(())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.5), "-2.5000000000000000e0");
        let x = 4.489_487_525_752_613_f64;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn json_floats_reformatted() {
        #[derive(Serialize)]
        struct S {
            a: f64,
            b: Vec<f64>,
            n: u32,
            bad: f64,
        }
        let s = to_json(&S { a: 0.5, b: vec![1e-300], n: 3, bad: f64::INFINITY }).unwrap();
        assert!(s.contains("\"a\": 5.0000000000000000e-1"), "{s}");
        assert!(s.contains("1.0000000000000001e-300") || s.contains("1.0000000000000000e-300"), "{s}");
        assert!(s.contains("\"n\": 3"));
        assert!(s.contains("\"bad\": null"));
    }

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
