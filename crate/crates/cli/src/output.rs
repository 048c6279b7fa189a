use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::commands::CliError;
use crate::Format;

pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| {
                CliError::Input(format!("--out {}: {e}", p.display()))
            })?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Flattens nested objects and arrays into dotted `field,value` rows.
fn flatten(prefix: &str, value: &Value, rows: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(&key(k), v, rows)),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&key(&i.to_string()), v, rows)),
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

pub fn write_value<T: Serialize>(
    value: &T,
    format: Format,
    mut out: impl Write,
) -> Result<(), CliError> {
    let io_err = |e: io::Error| CliError::Input(format!("write failed: {e}"));
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, value)
                .map_err(|e| CliError::Input(e.to_string()))?;
            writeln!(out).map_err(io_err)?;
        }
        Format::Csv => {
            let json = serde_json::to_value(value).map_err(|e| CliError::Input(e.to_string()))?;
            let mut rows = Vec::new();
            flatten("", &json, &mut rows);
            let mut w = csv::Writer::from_writer(&mut out);
            let csv_err = |e: csv::Error| CliError::Input(format!("write failed: {e}"));
            w.write_record(["field", "value"]).map_err(csv_err)?;
            for (k, v) in rows {
                w.write_record([k, v]).map_err(csv_err)?;
            }
            w.flush().map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)
}
