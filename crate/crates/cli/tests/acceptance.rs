//! Acceptance suite: one PASS/FAIL line per criterion, process exits non-zero
//! if any criterion fails. Tolerances and protocols are fixed here, not tuned.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use selab_core::mesh::DiscreteField;
use selab_core::verify::{
    acceptance_grid, check_energy_inequality, check_energy_tested, check_monotonicity,
    manufactured_study, run_experiment, weak_residual, ManufacturedCase, ObservedOrder, Protocol,
};
use selab_core::{
    continuation_sequence, CoefficientSpec, ExponentTable, ProblemSpec, RadialMesh, SolveOutcome,
    SolverOptions, SourceSpec,
};

const SCHEDULE: [u32; 7] = [1, 2, 4, 8, 16, 32, 64];

struct Verdict {
    passed: bool,
    summary: String,
    notes: Vec<String>,
}

impl Verdict {
    fn new(passed: bool, summary: impl Into<String>) -> Self {
        Self { passed, summary: summary.into(), notes: Vec::new() }
    }

    fn note(mut self, line: impl Into<String>) -> Self {
        self.notes.push(line.into());
        self
    }
}

fn within_budget(v: Verdict, elapsed: Duration, budget: Duration) -> Verdict {
    if elapsed <= budget {
        v
    } else {
        let summary = format!("{}; runtime {:.1}s exceeds {:.0}s", v.summary, elapsed.as_secs_f64(), budget.as_secs_f64());
        Verdict { passed: false, summary, notes: v.notes }
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Exponent identities over 10^3 random valid parameter points.
fn criterion_1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1ab);
    let (mut worst, mut drawn, mut tried) = ([0.0_f64; 3], 0, 0);
    while drawn < 1000 {
        tried += 1;
        let dim: u32 = rng.gen_range(3..=10);
        let n = f64::from(dim);
        let p: f64 = rng.gen_range(0.05..3.0);
        let gamma: f64 = rng.gen_range((p - 1.0).max(0.0)..p + 1.0);
        let m: f64 = rng.gen_range(1.0..n / 2.0);
        let t = ExponentTable::compute(dim, p, gamma, m).expect("valid parameters");
        let (Some(delta), Some(theta), Some(mss), Some(sigma)) = (t.delta, t.theta, t.m_double_star, t.sigma) else {
            continue;
        };
        if (2.0 - sigma).abs() < 1e-9 {
            continue;
        }
        drawn += 1;
        let bar_conj = t.m_hi / (t.m_hi - 1.0);
        let e = [
            rel_err((-p + delta + 1.0) * t.two_star / 2.0, mss * (gamma + 1.0 - p)),
            rel_err(sigma * (p - theta + 1.0) / (2.0 - sigma), n * (1.0 + theta - p) / (n - 2.0)),
            rel_err(bar_conj * (p + 1.0 - gamma), t.two_star),
        ];
        for (w, x) in worst.iter_mut().zip(e) {
            *w = w.max(x);
        }
    }
    let passed = worst.iter().all(|&w| w <= 1e-12);
    Verdict::new(
        passed,
        format!(
            "{drawn} points ({tried} drawn); worst relative errors {:.2e}, {:.2e}, {:.2e} (bound 1e-12)",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn criterion_2() -> Verdict {
    let case = ManufacturedCase::new(3, 1.0, 2.0, 1000).expect("valid manufactured case");
    let study = manufactured_study(&case, &[64, 128, 256], &SolverOptions::default()).expect("study runs");
    let finest = *study.errors.last().unwrap();
    match study.order {
        ObservedOrder::Observed(order) => Verdict::new(
            (1.8..=2.3).contains(&order) && finest <= 5e-4,
            format!(
                "errors {:.3e}, {:.3e}, {:.3e}; order {order:.4} (want [1.8, 2.3]); finest {finest:.3e} (want <= 5e-4)",
                study.errors[0], study.errors[1], study.errors[2]
            ),
        ),
        ObservedOrder::Inconclusive => Verdict::new(false, "observed order inconclusive"),
    }
}

fn solve_grid_case(spec: &ProblemSpec, cells: usize) -> (RadialMesh, Vec<SolveOutcome>) {
    let mesh = RadialMesh::new(spec.dimension, cells, 1.0).expect("mesh");
    let (outcomes, _) = continuation_sequence(&mesh, spec, &SCHEDULE, &SolverOptions::default()).expect("continuation");
    (mesh, outcomes)
}

fn criterion_3() -> Verdict {
    let mut failures = Vec::new();
    let mut min_interior = f64::INFINITY;
    for (name, spec) in acceptance_grid() {
        let (_, outcomes) = solve_grid_case(&spec, 256);
        let nonneg = outcomes.iter().map(|o| o.field.min()).fold(f64::INFINITY, f64::min);
        if nonneg < 0.0 {
            failures.push(format!("{name}: negative value {nonneg:e}"));
        }
        let mono = check_monotonicity(&outcomes).expect("same mesh");
        if !mono.passed {
            failures.push(format!("{name}: {}", mono.detail));
        }
        let mins: Vec<f64> = outcomes.iter().map(|o| o.interior_min).collect();
        min_interior = mins.iter().copied().fold(min_interior, f64::min);
        if mins.iter().any(|&m| m < 1e-6) {
            failures.push(format!("{name}: interior minimum below 1e-6: {mins:?}"));
        }
        if mins.windows(2).any(|w| w[1] < w[0] - 1e-8) {
            failures.push(format!("{name}: interior minimum decreases: {mins:?}"));
        }
    }
    let mut v = Verdict::new(
        failures.is_empty(),
        format!("12 cases x 7 levels, 256 cells; {} violations; smallest interior minimum {min_interior:.4e}", failures.len()),
    );
    for f in failures {
        v = v.note(f);
    }
    v
}

fn criterion_4() -> Verdict {
    let source = SourceSpec::RadialPower { amplitude: 1.0, a_exp: 2.5 };
    let spec = ProblemSpec::new(3, 0.5, 2.0, CoefficientSpec::constant(1.0), source, 1.0).expect("valid spec");
    let (mesh, outcomes) = solve_grid_case(&spec, 256);
    let last = outcomes.last().expect("levels");
    let literal = check_energy_inequality(&mesh, &spec, last).expect("Case3");
    let mut scaled = last.clone();
    scaled.field = last.field.map(|v| 10.0 * v);
    let control = check_energy_inequality(&mesh, &spec, &scaled).expect("Case3");
    let tested = check_energy_tested(&mesh, &spec, last).expect("Case3");
    Verdict::new(
        literal.passed && !control.passed,
        format!(
            "n=64: lhs {:.4} vs 1.05 * int f = {:.4} ({}); scaled-by-10 control lhs {:.1} ({})",
            literal.measured,
            1.05 * literal.bound_or_target,
            literal.detail,
            control.measured,
            if control.passed { "control did NOT fail" } else { "control fails as required" }
        ),
    )
    .note(format!(
        "info: tested form gamma int |grad u|^2 u^(gamma-1)/(1+T_n u)^p = {:.4} vs int T_n f = {:.4} ({}) -> {}",
        tested.measured,
        tested.bound_or_target,
        tested.detail,
        if tested.passed { "holds" } else { "violated" }
    ))
}

fn criterion_5() -> Verdict {
    let protocol = Protocol::default();
    let mut failures = Vec::new();
    let mut checked = 0;
    for (name, spec) in acceptance_grid() {
        let out = run_experiment(&spec, &protocol).expect("experiment runs");
        for c in out.report.checks.iter().filter(|c| {
            c.mandatory && (c.name.starts_with("stabilized:") || c.name.starts_with("cross_mesh:"))
        }) {
            checked += 1;
            if !c.passed {
                failures.push(format!("{name} {} = {:.4} (bound {})", c.name, c.measured, c.bound_or_target));
            }
        }
    }
    let mut v = Verdict::new(
        failures.is_empty(),
        format!(
            "schedule n=1..64, meshes 256/512: {} of {checked} claimed stabilization/cross-mesh checks fail",
            failures.len()
        ),
    );
    for f in failures {
        v = v.note(f);
    }

    // diagnostic only: the same criterion on a longer schedule
    let long = Protocol { n_schedule: (0..=14).map(|k| 1u32 << k).collect(), ..Protocol::default() };
    let mut long_fail = Vec::new();
    for (name, spec) in acceptance_grid() {
        let out = run_experiment(&spec, &long).expect("experiment runs");
        long_fail.extend(
            out.report
                .checks
                .iter()
                .filter(|c| c.mandatory && !c.passed && (c.name.starts_with("stabilized:") || c.name.starts_with("cross_mesh:")))
                .map(|c| format!("{name} {}={:.4}", c.name, c.measured)),
        );
    }
    v.note(format!(
        "info: with n up to 2^14 the same checks leave {} failures{}{}",
        long_fail.len(),
        if long_fail.is_empty() { "" } else { ": " },
        long_fail.join(", ")
    ))
}

fn criterion_6() -> Verdict {
    let mut failures = Vec::new();
    let (mut worst, mut weakest_control) = (0.0_f64, f64::INFINITY);
    let mut fallback = Vec::new();
    for (name, spec) in acceptance_grid() {
        let (mesh, outcomes) = solve_grid_case(&spec, 256);
        let probe = match outcomes.iter().rev().find(|o| !o.truncation_active) {
            Some(o) => o,
            None => {
                fallback.push(name.clone());
                outcomes.last().expect("levels")
            }
        };
        let res = weak_residual(&mesh, &spec, &probe.field, probe.level).expect("positive on hat supports");
        worst = worst.max(res);
        if res > 1e-8 {
            failures.push(format!("{name}: residual {res:.3e} at n={}", probe.level));
        }
        let mut values = probe.field.values().to_vec();
        let node = mesh.nodes().iter().position(|&r| r >= 0.5).expect("node");
        values[node] += 0.1;
        let bumped = DiscreteField::new(&mesh, values).expect("field");
        let perturbed = weak_residual(&mesh, &spec, &bumped, probe.level).expect("positive");
        weakest_control = weakest_control.min(perturbed);
        if perturbed <= 1e-3 {
            failures.push(format!("{name}: perturbed residual only {perturbed:.3e}"));
        }
    }
    let mut v = Verdict::new(
        failures.is_empty(),
        format!("worst residual {worst:.3e} (bound 1e-8); smallest perturbed residual {weakest_control:.3e} (want > 1e-3)"),
    );
    if !fallback.is_empty() {
        v = v.note(format!(
            "info: truncation active at every level for {}; evaluated at n=64",
            fallback.join(", ")
        ));
    }
    for f in failures {
        v = v.note(f);
    }
    v
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn selab(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_selab")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn criterion_7() -> Verdict {
    let mut problems = Vec::new();
    let grid = fixture("acceptance_grid.json");
    let plan = selab_cli::SweepConfig::load(&grid).and_then(|s| s.plan()).expect("grid fixture plans");
    let same_grid = plan.len() == 12
        && plan.iter().zip(acceptance_grid()).all(|(c, (name, spec))| c.name == name && c.spec == spec);
    if !same_grid {
        problems.push("acceptance_grid.json does not match the acceptance grid".to_string());
    }

    let dirs = [tempfile::tempdir().expect("tempdir"), tempfile::tempdir().expect("tempdir")];
    let mut codes = Vec::new();
    for (dir, jobs) in dirs.iter().zip(["1", "4"]) {
        let (code, err) = selab(&["sweep", "--config", grid.to_str().unwrap(), "--jobs", jobs, "--out", dir.path().to_str().unwrap()]);
        if !matches!(code, 0 | 1) {
            problems.push(format!("sweep exited {code}: {err}"));
        }
        codes.push(code);
    }
    let read = |d: &tempfile::TempDir, f: &str| std::fs::read(d.path().join(f)).unwrap_or_default();
    let (a, b) = (read(&dirs[0], "summary.csv"), read(&dirs[1], "summary.csv"));
    if a.is_empty() || a != b {
        problems.push("summary.csv differs between runs".into());
    }
    for case in &plan {
        for f in ["trace.csv", "report.json"] {
            let rel = format!("{}/{f}", case.dir_name());
            if read(&dirs[0], &rel) != read(&dirs[1], &rel) {
                problems.push(format!("{rel} differs between runs"));
            }
        }
    }
    let text = String::from_utf8_lossy(&a);
    let any_fail = text.lines().skip(1).any(|l| l.split(',').nth(7) != Some("pass"));
    if codes.iter().any(|&c| c != i32::from(any_fail)) {
        problems.push(format!("sweep exit codes {codes:?} disagree with summary verdicts"));
    }
    if text.lines().count() != 13 {
        problems.push(format!("summary has {} lines, want 13", text.lines().count()));
    }

    let expect = [
        (vec!["solve", "--config"], "bad_unknown_key.json", 2),
        (vec!["solve", "--config"], "bad_not_integrable.json", 2),
        (vec!["sweep", "--config"], "bad_sweep_empty.json", 2),
        (vec!["sweep", "--config"], "bad_sweep_cap.json", 2),
        (vec!["solve", "--config"], "nonconvergent.json", 3),
    ];
    let scratch = tempfile::tempdir().expect("tempdir");
    for (cmd, file, want) in expect {
        let path = fixture(file);
        let mut args = cmd.clone();
        args.push(path.to_str().unwrap());
        args.extend(["--out", scratch.path().to_str().unwrap()]);
        let (code, _) = selab(&args);
        if code != want {
            problems.push(format!("{} {file}: exit {code}, want {want}", cmd[0]));
        }
    }

    let mut v = Verdict::new(
        problems.is_empty(),
        format!(
            "two sweeps of the 12-case grid (jobs 1 and 4): summary.csv {} bytes, {}; sweep exit {:?}; 5 negative fixtures checked",
            a.len(),
            if a == b && !a.is_empty() { "byte-identical" } else { "NOT identical" },
            codes
        ),
    );
    for p in problems {
        v = v.note(p);
    }
    v
}

/// Label, check, and runtime budget in seconds (criterion 7 has none).
type Criterion = (&'static str, fn() -> Verdict, Option<u64>);

fn main() {
    let criteria: [Criterion; 7] = [
        ("exponent identities", criterion_1, Some(1)),
        ("manufactured convergence", criterion_2, Some(5)),
        ("positivity and monotonicity", criterion_3, Some(60)),
        ("energy inequality (Case3)", criterion_4, Some(10)),
        ("regime stabilization", criterion_5, Some(300)),
        ("weak-form residual", criterion_6, Some(5)),
        ("determinism and exit codes", criterion_7, None),
    ];
    let mut failed = 0;
    println!();
    for (i, (label, run, budget)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let v = run();
        let v = match budget {
            Some(secs) => within_budget(v, start.elapsed(), Duration::from_secs(secs)),
            None => v,
        };
        failed += usize::from(!v.passed);
        println!(
            "criterion {}: {} {label} [{:.2}s] {}",
            i + 1,
            if v.passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            v.summary
        );
        for n in &v.notes {
            println!("    {n}");
        }
    }
    println!("acceptance: {} of 7 criteria pass", 7 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
