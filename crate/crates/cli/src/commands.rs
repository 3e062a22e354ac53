use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::Value;

use selab_core::verify::{manufactured_study, run_experiment, ManufacturedCase, ObservedOrder};
use selab_core::SolverOptions;

use crate::config::{read_json, PlannedCase, RunConfig, SweepConfig};
use crate::output::{
    json_bytes, mms_csv, report_value, summary_csv, trace_csv, write_file, SummaryRow,
};
use crate::{CliError, Result, EXIT_OK, EXIT_VERDICT};

/// Order below which the manufactured study fails.
pub const MIN_ORDER: f64 = 1.8;

const DEFAULT_SOLVE_DIR: &str = "selab-out";
const DEFAULT_SWEEP_DIR: &str = "selab-sweep";

/// Runs one experiment and writes `trace.csv` and `report.json` into `out`.
/// Returns the verdict, plus the claim verdicts and final trace row for summaries.
fn run_one(spec_cfg: &RunConfig, spec: &selab_core::ProblemSpec, out: &Path) -> Result<SummaryParts> {
    let output = run_experiment(spec, &spec_cfg.protocol)?;
    write_file(&out.join("trace.csv"), &trace_csv(&output.traces)?)?;
    write_file(&out.join("report.json"), &json_bytes(&report_value(&output, &spec_cfg.protocol)?))?;
    Ok(SummaryParts {
        overall: output.report.overall,
        regime: output.report.regime.case_id.to_string(),
        claims: output
            .report
            .claim_verdicts()
            .into_iter()
            .map(|(c, ok)| (c.to_string(), ok))
            .collect(),
        final_row: output.traces.last().and_then(|t| t.last().cloned()),
        failed: output
            .report
            .checks
            .iter()
            .filter(|c| c.mandatory && !c.passed)
            .map(|c| c.name.clone())
            .collect(),
    })
}

struct SummaryParts {
    overall: bool,
    regime: String,
    claims: Vec<(String, bool)>,
    final_row: Option<selab_core::verify::TraceRow>,
    failed: Vec<String>,
}

pub fn cmd_solve(config: &Path, out: Option<&Path>) -> Result<i32> {
    let cfg = RunConfig::load(config)?;
    let spec = cfg.spec()?;
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_SOLVE_DIR));
    let parts = run_one(&cfg, &spec, &dir)?;
    println!("regime: {}", parts.regime);
    for (claim, ok) in &parts.claims {
        println!("  {claim}: {}", if *ok { "pass" } else { "fail" });
    }
    for name in &parts.failed {
        println!("  failed check: {name}");
    }
    println!("overall: {}  ({})", if parts.overall { "pass" } else { "fail" }, dir.display());
    Ok(if parts.overall { EXIT_OK } else { EXIT_VERDICT })
}

fn run_case(case: &PlannedCase, root: &Path) -> SummaryRow {
    let mut row = SummaryRow {
        case: case.dir_name(),
        overrides: case.overrides.clone(),
        dimension: case.spec.dimension,
        p: case.spec.p,
        gamma: case.spec.gamma,
        m: case.spec.m,
        regime: selab_core::classify_regime(&case.spec).case_id.to_string(),
        overall: None,
        claims: Vec::new(),
        final_row: None,
        error: String::new(),
    };
    match run_one(&case.config, &case.spec, &root.join(case.dir_name())) {
        Ok(parts) => {
            row.overall = Some(parts.overall);
            row.claims = parts.claims;
            row.final_row = parts.final_row;
            row.error = parts.failed.join(";");
        }
        Err(e) => row.error = e.to_string(),
    }
    row
}

/// Runs every case of the sweep; `jobs` overrides the configured worker count.
pub fn cmd_sweep(config: &Path, jobs: Option<usize>, out: Option<&Path>) -> Result<i32> {
    let sweep = SweepConfig::load(config)?;
    let plan = sweep.plan()?;
    let root = out
        .map(Path::to_path_buf)
        .or_else(|| sweep.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_SWEEP_DIR));
    let workers = jobs.or(sweep.jobs).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let rows: Vec<SummaryRow> = pool.install(|| plan.par_iter().map(|c| run_case(c, &root)).collect());
    write_file(&root.join("summary.csv"), &summary_csv(&rows)?)?;

    let mut all_pass = true;
    for r in &rows {
        let verdict = match r.overall {
            Some(true) => "pass",
            Some(false) => "fail",
            None => "error",
        };
        all_pass &= r.overall == Some(true);
        println!("{} {} {}", r.case, r.regime, verdict);
    }
    println!("{} cases, summary at {}", rows.len(), root.join("summary.csv").display());
    Ok(if all_pass { EXIT_OK } else { EXIT_VERDICT })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedArgs {
    pub dimension: u32,
    pub p: f64,
    pub gamma: f64,
    pub cells: Vec<usize>,
    pub level: u32,
    pub out: PathBuf,
}

pub fn cmd_manufactured(args: &ManufacturedArgs) -> Result<i32> {
    if args.cells.len() < 3 {
        return Err(CliError::Config(format!(
            "need at least three meshes, got {}",
            args.cells.len()
        )));
    }
    let case = ManufacturedCase::new(args.dimension, args.p, args.gamma, args.level)?;
    let study = manufactured_study(&case, &args.cells, &SolverOptions::default())?;
    println!("{:>8} {:>24}", "cells", "sup_error");
    for (c, e) in study.cells.iter().zip(&study.errors) {
        println!("{c:>8} {e:>24.16e}");
    }
    write_file(&args.out.join("mms.csv"), &mms_csv(&study)?)?;
    Ok(match study.order {
        ObservedOrder::Observed(order) => {
            println!("observed order: {order:.6}");
            if order >= MIN_ORDER {
                EXIT_OK
            } else {
                EXIT_VERDICT
            }
        }
        ObservedOrder::Inconclusive => {
            println!("observed order: inconclusive");
            EXIT_VERDICT
        }
    })
}

/// Pretty-prints `report.json` from a run directory (or the file itself).
pub fn cmd_report(input: &Path) -> Result<i32> {
    let path = if input.is_dir() { input.join("report.json") } else { input.to_path_buf() };
    let report = read_json(&path)?;
    print!("{}", render_report(&report)?);
    Ok(EXIT_OK)
}

pub fn render_report(report: &Value) -> Result<String> {
    use std::fmt::Write;
    let bad = |what: &str| CliError::Config(format!("report.json lacks {what}"));
    let spec = report.get("spec").ok_or_else(|| bad("`spec`"))?;
    let regime = report.get("regime").ok_or_else(|| bad("`regime`"))?;
    let checks = report.get("checks").and_then(Value::as_array).ok_or_else(|| bad("`checks`"))?;
    let num = |v: &Value| match v {
        Value::Number(n) => n.to_string(),
        Value::Null => "-".into(),
        other => other.to_string(),
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        "N={} p={} gamma={} m={}",
        num(&spec["dimension"]),
        num(&spec["p"]),
        num(&spec["gamma"]),
        num(&spec["m"])
    );
    let _ = writeln!(s, "source: {}", spec["source"]);
    let _ = writeln!(s, "coefficient: {}", spec["coeff"]);
    let _ = writeln!(s, "regime: {} (bounded: {})", regime["case_id"].as_str().unwrap_or("?"), regime["bounded"]);
    if let Some(table) = report.get("exponents").and_then(Value::as_object) {
        let cells: Vec<String> = table.iter().map(|(k, v)| format!("{k}={}", num(v))).collect();
        let _ = writeln!(s, "exponents: {}", cells.join(" "));
    }
    if let Some(claims) = report.get("claim_verdicts").and_then(Value::as_array) {
        let _ = writeln!(s, "claims:");
        for c in claims {
            let ok = c["passed"].as_bool().unwrap_or(false);
            let _ = writeln!(s, "  {:<24} {}", c["claim"].as_str().unwrap_or("?"), if ok { "pass" } else { "fail" });
        }
    }
    let _ = writeln!(s, "checks:");
    for c in checks {
        let passed = c["passed"].as_bool().unwrap_or(false);
        let mandatory = c["mandatory"].as_bool().unwrap_or(true);
        let _ = writeln!(
            s,
            "  {} {} {:<40} measured={:<24} bound={:<24} {}",
            if passed { "PASS" } else { "FAIL" },
            if mandatory { "M" } else { "i" },
            c["name"].as_str().unwrap_or("?"),
            num(&c["measured"]),
            num(&c["bound_or_target"]),
            c["detail"].as_str().unwrap_or("")
        );
    }
    let overall = report.get("overall").and_then(Value::as_bool).ok_or_else(|| bad("`overall`"))?;
    let _ = writeln!(s, "overall: {}", if overall { "pass" } else { "fail" });
    Ok(s)
}
