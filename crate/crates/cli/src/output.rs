//! Byte-stable CSV and JSON emission.
//!
//! Floats in CSV use 17 significant digits in scientific notation; JSON uses
//! serde_json's shortest round-trip form with sorted keys. Lines end in `\n`.

use std::path::Path;

use serde_json::{json, Value};

use selab_core::verify::{ConvergenceStudy, ExperimentOutput, NormKey, NormTrace, Protocol, TraceRow};

use crate::{CliError, Result};

pub const TRACE_HEADER: [&str; 13] = [
    "n", "cells", "L2", "Linf", "Lmss", "H1", "LsigmaGrad", "H1interior", "PowerH1", "IntF",
    "InteriorMin", "TruncActive", "Iters",
];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| CliError::Config(format!("csv buffer: {e}")))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Config(format!("csv: {e}"))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn trace_record(row: &TraceRow) -> Vec<String> {
    let mut rec = vec![row.n.to_string(), row.cells.to_string()];
    rec.extend(NormKey::ALL.iter().map(|&k| fmt_opt(row.get(k))));
    rec.push(fmt_f64(row.int_truncated_f));
    rec.push(fmt_f64(row.interior_min));
    rec.push(u8::from(row.truncation_active).to_string());
    rec.push(row.iterations.to_string());
    rec
}

/// All meshes in protocol order, levels ascending within each mesh.
pub fn trace_csv(traces: &[NormTrace]) -> Result<Vec<u8>> {
    let mut w = csv_writer();
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for row in traces.iter().flat_map(|t| t.rows()) {
        w.write_record(trace_record(row)).map_err(csv_err)?;
    }
    finish(w)
}

/// The verdict report plus the protocol and per-claim verdicts.
pub fn report_value(output: &ExperimentOutput, protocol: &Protocol) -> Result<Value> {
    let mut value = serde_json::to_value(&output.report).map_err(|e| CliError::Config(e.to_string()))?;
    let claims: Vec<Value> = output
        .report
        .claim_verdicts()
        .into_iter()
        .map(|(claim, passed)| json!({ "claim": claim, "passed": passed }))
        .collect();
    let obj = value.as_object_mut().expect("report serializes to an object");
    obj.insert("claim_verdicts".into(), Value::Array(claims));
    obj.insert(
        "protocol".into(),
        serde_json::to_value(protocol).map_err(|e| CliError::Config(e.to_string()))?,
    );
    Ok(value)
}

pub fn json_bytes(value: &Value) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("json values always serialize");
    text.push('\n');
    text.into_bytes()
}

/// One summary line per sweep case.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub case: String,
    pub overrides: String,
    pub dimension: u32,
    pub p: f64,
    pub gamma: f64,
    pub m: f64,
    pub regime: String,
    /// `None` when the case failed to run.
    pub overall: Option<bool>,
    pub claims: Vec<(String, bool)>,
    pub final_row: Option<TraceRow>,
    pub error: String,
}

pub const SUMMARY_HEADER_HEAD: [&str; 9] =
    ["case", "overrides", "N", "p", "gamma", "m", "regime", "overall", "claims"];

pub fn summary_csv(rows: &[SummaryRow]) -> Result<Vec<u8>> {
    let mut w = csv_writer();
    let mut header: Vec<&str> = SUMMARY_HEADER_HEAD.to_vec();
    header.extend(NormKey::ALL.iter().map(|k| k.column()));
    header.push("error");
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let claims: Vec<String> = r
            .claims
            .iter()
            .map(|(c, ok)| format!("{c}:{}", if *ok { "pass" } else { "fail" }))
            .collect();
        let mut rec = vec![
            r.case.clone(),
            r.overrides.clone(),
            r.dimension.to_string(),
            fmt_f64(r.p),
            fmt_f64(r.gamma),
            fmt_f64(r.m),
            r.regime.clone(),
            match r.overall {
                Some(true) => "pass".into(),
                Some(false) => "fail".into(),
                None => "error".into(),
            },
            claims.join(";"),
        ];
        rec.extend(NormKey::ALL.iter().map(|&k| fmt_opt(r.final_row.as_ref().and_then(|row| row.get(k)))));
        rec.push(r.error.clone());
        w.write_record(&rec).map_err(csv_err)?;
    }
    finish(w)
}

pub fn mms_csv(study: &ConvergenceStudy) -> Result<Vec<u8>> {
    let mut w = csv_writer();
    w.write_record(["cells", "h", "sup_error", "observed_order"]).map_err(csv_err)?;
    let order = study.order.value().map(fmt_f64).unwrap_or_else(|| "inconclusive".into());
    for (&cells, &err) in study.cells.iter().zip(&study.errors) {
        w.write_record([cells.to_string(), fmt_f64(1.0 / cells as f64), fmt_f64(err), order.clone()])
            .map_err(csv_err)?;
    }
    finish(w)
}
