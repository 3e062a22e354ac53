//! Executable forms of the a-priori estimates and of the positivity and
//! monotonicity properties of the approximating sequence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{grad_lp_seminorm, DiscreteField, RadialMesh};
use crate::model::{ProblemSpec, CASE2_TOL};
use crate::solver::{LevelDiscretization, SolveOutcome};

/// Relative slack allowed on the energy inequality.
pub const ENERGY_TOL: f64 = 0.05;
/// Monotonicity slack, scaled by `1 + ||u_{n+1}||_inf`.
pub const MONOTONE_TOL: f64 = 1e-6;
/// Smallest admissible field value on a test-function support.
pub const HAZARD_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub bound_or_target: f64,
    pub tolerance: f64,
    pub detail: String,
    /// Only mandatory checks enter the overall verdict.
    pub mandatory: bool,
}

impl CheckResult {
    pub fn informational(mut self) -> Self {
        self.mandatory = false;
        self
    }
}

/// `(4 alpha gamma / (gamma+1-p)^2) |u^{(gamma+1-p)/2}|_{H^1}^2 <= (1 + tol) int f`.
pub fn check_energy_inequality(
    mesh: &RadialMesh,
    spec: &ProblemSpec,
    outcome: &SolveOutcome,
) -> Result<CheckResult> {
    energy_inequality_for_field(mesh, spec, &outcome.field)
}

pub fn energy_inequality_for_field(
    mesh: &RadialMesh,
    spec: &ProblemSpec,
    field: &DiscreteField,
) -> Result<CheckResult> {
    let excess = spec.gamma + 1.0 - spec.p;
    if !(spec.gamma - (spec.p + 1.0) > CASE2_TOL) {
        return Err(Error::WrongRegime(format!(
            "energy inequality needs gamma > p + 1 (p={}, gamma={})",
            spec.p, spec.gamma
        )));
    }
    let e = 0.5 * excess;
    let power = field.map(|v| v.max(0.0).powf(e));
    let semi = grad_lp_seminorm(mesh, &power, 2.0, 1.0)?;
    let lhs = 4.0 * spec.coeff.alpha * spec.gamma / (excess * excess) * semi * semi;
    let rhs = spec.source.total_integral(spec.dimension);
    let passed = lhs <= (1.0 + ENERGY_TOL) * rhs;
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(CheckResult {
        name: "energy_inequality".into(),
        passed,
        measured: lhs,
        bound_or_target: rhs,
        tolerance: ENERGY_TOL,
        detail: format!("lhs/int f = {ratio:.6}"),
        mandatory: true,
    })
}

/// The estimate actually delivered by testing with `u^gamma`, without replacing
/// `(1 + T_n u)^{-p}` by `u^{-p}`:
/// `gamma int a |grad u|^2 u^{gamma-1} / (1 + T_n u)^p <= int T_n f`.
/// Evaluated with the scheme's own face coefficients, so the left side is the
/// discrete pairing of the operator with `u^gamma`.
pub fn check_energy_tested(
    mesh: &RadialMesh,
    spec: &ProblemSpec,
    outcome: &SolveOutcome,
) -> Result<CheckResult> {
    let disc = LevelDiscretization::new(mesh, spec, outcome.level)?;
    let u = outcome.field.values();
    let g = spec.gamma;
    let lhs: f64 = (0..mesh.cells())
        .map(|i| {
            let (a, b) = (u[i].max(0.0), u[i + 1].max(0.0));
            disc.face_coefficient(u, i) * (a - b) * (a.powf(g) - b.powf(g))
        })
        .sum();
    let rhs = disc.total_truncated_source();
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(CheckResult {
        name: "energy_tested".into(),
        passed: lhs <= (1.0 + ENERGY_TOL) * rhs,
        measured: lhs,
        bound_or_target: rhs,
        tolerance: ENERGY_TOL,
        detail: format!("lhs/int T_n f = {ratio:.6}"),
        mandatory: false,
    })
}

/// Nodewise `u_n <= u_{n+1} + 1e-6 (1 + ||u_{n+1}||_inf)` over consecutive outcomes.
pub fn check_monotonicity(outcomes: &[SolveOutcome]) -> Result<CheckResult> {
    if outcomes.len() < 2 {
        return Err(Error::InvalidArgument("monotonicity needs at least two outcomes".into()));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut worst_at = (0, 0);
    for (k, pair) in outcomes.windows(2).enumerate() {
        let (lo, hi) = (&pair[0].field, &pair[1].field);
        if lo.len() != hi.len() {
            return Err(Error::MeshMismatch);
        }
        let slack = MONOTONE_TOL * (1.0 + hi.sup_norm());
        for (i, (a, b)) in lo.values().iter().zip(hi.values()).enumerate() {
            // violation measured in units of the allowed slack
            let v = (a - b) / slack;
            if v > worst {
                worst = v;
                worst_at = (k, i);
            }
        }
    }
    let (k, i) = worst_at;
    Ok(CheckResult {
        name: "monotonicity".into(),
        passed: worst <= 1.0,
        measured: worst,
        bound_or_target: 1.0,
        tolerance: MONOTONE_TOL,
        detail: format!(
            "max (u_n - u_next)/slack over pairs; worst between levels {} and {} at node {i}",
            outcomes[k].level,
            outcomes[k + 1].level
        ),
        mandatory: true,
    })
}

pub fn check_nonnegativity(outcomes: &[SolveOutcome]) -> CheckResult {
    let min = outcomes.iter().map(|o| o.field.min()).fold(f64::INFINITY, f64::min);
    CheckResult {
        name: "nonnegativity".into(),
        passed: min >= 0.0,
        measured: min,
        bound_or_target: 0.0,
        tolerance: 0.0,
        detail: "smallest nodal value over all levels".into(),
        mandatory: true,
    }
}

/// Interior minimum at every level stays above `floor`.
pub fn check_interior_positive(outcomes: &[SolveOutcome], floor: f64) -> CheckResult {
    let min = outcomes.iter().map(|o| o.interior_min).fold(f64::INFINITY, f64::min);
    CheckResult {
        name: "interior_min_positive".into(),
        passed: min >= floor,
        measured: min,
        bound_or_target: floor,
        tolerance: 0.0,
        detail: "smallest interior minimum over all levels".into(),
        mandatory: true,
    }
}

/// Interior minimum does not decrease along the schedule (within `tol`).
pub fn check_interior_nondecreasing(outcomes: &[SolveOutcome], tol: f64) -> CheckResult {
    let drop = outcomes
        .windows(2)
        .map(|w| w[0].interior_min - w[1].interior_min)
        .fold(0.0_f64, f64::max);
    CheckResult {
        name: "interior_min_nondecreasing".into(),
        passed: drop <= tol,
        measured: drop,
        bound_or_target: 0.0,
        tolerance: tol,
        detail: "largest decrease of the interior minimum between consecutive levels".into(),
        mandatory: true,
    }
}

/// Radial hat `max(0, 1 - |r - center| / half_width)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hat {
    pub center: f64,
    pub half_width: f64,
}

impl Hat {
    pub fn eval(&self, r: f64) -> f64 {
        (1.0 - (r - self.center).abs() / self.half_width).max(0.0)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }
}

/// Test functions used by [`weak_residual`]; every support lies in `[0.05, 0.85]`.
pub fn default_hats() -> Vec<Hat> {
    (2..=7).map(|k| Hat { center: 0.1 * f64::from(k), half_width: 0.15 }).collect()
}

/// Largest normalized defect of the weak formulation over the hat family.
///
/// For each hat `phi` the two sides are the face sum of
/// `a phi' u' / (1 + T_n(u))^p` and the cell sum of `T_n(f) phi / (u + 1/n)^gamma`,
/// both with the scheme's own weights.
pub fn weak_residual(
    mesh: &RadialMesh,
    spec: &ProblemSpec,
    field: &DiscreteField,
    n: u32,
) -> Result<f64> {
    weak_residual_with(mesh, spec, field, n, &default_hats())
}

pub fn weak_residual_with(
    mesh: &RadialMesh,
    spec: &ProblemSpec,
    field: &DiscreteField,
    n: u32,
    hats: &[Hat],
) -> Result<f64> {
    if field.len() != mesh.nodes().len() {
        return Err(Error::MeshMismatch);
    }
    let disc = LevelDiscretization::new(mesh, spec, n)?;
    let u = field.values();
    let r = mesh.nodes();
    let mut worst = 0.0_f64;
    for hat in hats {
        let (lo, hi) = hat.support();
        if lo < 0.0 || hi > 0.9 {
            return Err(Error::InvalidArgument(format!(
                "test function support [{lo}, {hi}] leaves r <= 0.9"
            )));
        }
        let phi: Vec<f64> = r.iter().map(|&x| hat.eval(x)).collect();
        for (i, &x) in r.iter().enumerate() {
            if x >= lo && x <= hi && u[i] < HAZARD_FLOOR {
                return Err(Error::DivisionHazard { node: i, floor: HAZARD_FLOOR });
            }
        }
        let mut lhs = 0.0;
        for i in 0..mesh.cells() {
            let dphi = phi[i + 1] - phi[i];
            if dphi != 0.0 {
                lhs += disc.face_coefficient(u, i) * (u[i + 1] - u[i]) * dphi;
            }
        }
        let mut rhs = 0.0;
        for (i, &w) in phi.iter().enumerate() {
            if w != 0.0 {
                rhs += disc.load(u, i) * w;
            }
        }
        let scale = lhs.abs().max(rhs.abs());
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ObservedOrder {
    Observed(f64),
    Inconclusive,
}

impl ObservedOrder {
    pub fn value(&self) -> Option<f64> {
        match self {
            ObservedOrder::Observed(v) => Some(*v),
            ObservedOrder::Inconclusive => None,
        }
    }
}

/// Observed order from errors at `h, h/2, h/4`: `log2(e_{h/2} / e_{h/4})`.
pub fn convergence_order(errors: [f64; 3]) -> ObservedOrder {
    let [a, b, c] = errors;
    if !(a > 0.0 && b > 0.0 && c > 0.0) || !(a > b && b > c) {
        return ObservedOrder::Inconclusive;
    }
    ObservedOrder::Observed((b / c).log2())
}
