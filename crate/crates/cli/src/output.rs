//! Number formatting, manifests and output sinks.

use crate::error::CliError;
use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Ten significant digits, plain notation for moderate magnitudes.
pub fn real(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.9e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..15).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

/// Rounds to ten significant digits; JSON results pass through this.
pub fn round10(x: f64) -> f64 {
    if x.is_finite() {
        format!("{x:.9e}").parse().unwrap()
    } else {
        x
    }
}

fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .map(|x| json!(round10(x)))
            .unwrap_or(Value::Number(n)),
        Value::Array(items) => Value::Array(items.into_iter().map(round_json).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, round_json(v))).collect())
        }
        other => other,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub input: Option<String>,
    pub config: Value,
    pub seed: u64,
    pub version: String,
    pub started: String,
    pub finished: String,
}

impl RunManifest {
    pub fn new(
        command: &str,
        input: Option<&Path>,
        config: Value,
        seed: u64,
        started: DateTime<Utc>,
    ) -> Self {
        Self {
            command: command.into(),
            input: input.map(|p| p.display().to_string()),
            config,
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            started: started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
        }
    }
}

pub fn json_document(manifest: &RunManifest, result: impl Serialize) -> Result<String, CliError> {
    let doc = json!({
        "schema": 1,
        "manifest": manifest,
        "result": round_json(serde_json::to_value(result)?),
    });
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

/// RFC 4180 CSV from a header and rows of already formatted cells.
pub fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Left-aligned plain-text table.
pub fn table_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    out += &line(
        widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .iter()
            .map(|s| s.as_str())
            .collect(),
    );
    for row in rows {
        out += &line(row.iter().map(|s| s.as_str()).collect());
    }
    out
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".manifest.json");
    path.with_file_name(name)
}

/// Writes `body` to `output` or stdout. Non-JSON file outputs get a
/// `<file>.manifest.json` sidecar.
pub fn emit(
    body: &str,
    output: Option<&Path>,
    manifest: &RunManifest,
    embeds_manifest: bool,
) -> Result<(), CliError> {
    match output {
        Some(path) => {
            std::fs::write(path, body)?;
            if !embeds_manifest {
                std::fs::write(sidecar(path), json_document(manifest, Value::Null)?)?;
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_significant_digits() {
        assert_eq!(real(118.40540000001), "118.4054000");
        assert_eq!(real(0.5), "0.5000000000");
        assert_eq!(real(1.0 / 3.0), "0.3333333333");
        assert_eq!(real(1e-8), "1.000000000e-8");
        assert_eq!(real(-2.5e20), "-2.500000000e20");
        assert_eq!(real(0.0), "0");
        assert_eq!(round10(1.0 / 3.0), 0.3333333333);
    }

    #[test]
    fn csv_quotes_and_crlf() {
        let s = csv_text(&["a", "b"], &[vec!["1".into(), "x,y".into()]]).unwrap();
        assert_eq!(s, "a,b\r\n1,\"x,y\"\r\n");
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(
            sidecar(Path::new("/tmp/out.csv")),
            PathBuf::from("/tmp/out.csv.manifest.json")
        );
    }
}
