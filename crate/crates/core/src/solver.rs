//! Finite-volume solver for the level-n approximating problems.
//!
//! Each Picard step freezes the iterate inside the degenerate coefficient
//! `(1 + T_n(u))^{-p}` and inside the singular denominator `(u + 1/n)^gamma`,
//! which leaves a symmetric tridiagonal M-matrix system. The level-n solutions
//! are produced by warm-started continuation along an increasing schedule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry;
use crate::mesh::{self, DiscreteField, RadialMesh};
use crate::model::{truncate, ProblemSpec, SourceSpec};
use crate::verify::trace::{NormTrace, TraceRow};

/// Default interior window radius.
pub const DEFAULT_RHO: f64 = 0.8;

const PIVOT_FLOOR: f64 = 1e-300;

/// `sub[i] u_{i-1} + diag[i] u_i + sup[i] u_{i+1} = rhs[i]` for the unknown nodes
/// `0..M`; the boundary node `M` is eliminated by `u(1) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn size(&self) -> usize {
        self.diag.len()
    }

    /// Non-positive off-diagonals and weak row diagonal dominance.
    pub fn is_m_matrix(&self) -> bool {
        (0..self.size()).all(|i| {
            self.sub[i] <= 0.0
                && self.sup[i] <= 0.0
                && self.diag[i] > 0.0
                && self.diag[i] >= -(self.sub[i] + self.sup[i]) * (1.0 - 1e-14)
        })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.size();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.sub[i] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.sup[i] * x[i + 1];
                }
                y
            })
            .collect()
    }
}

/// Thomas algorithm.
pub fn solve_tridiagonal(sys: &TridiagonalSystem) -> Result<Vec<f64>> {
    let n = sys.size();
    if sys.sub.len() != n || sys.sup.len() != n || sys.rhs.len() != n {
        return Err(Error::InvalidArgument("tridiagonal bands differ in length".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = sys.diag[0];
    if pivot.abs() < PIVOT_FLOOR {
        return Err(Error::SingularPivot { row: 0 });
    }
    c[0] = sys.sup[0] / pivot;
    d[0] = sys.rhs[0] / pivot;
    for i in 1..n {
        pivot = sys.diag[i] - sys.sub[i] * c[i - 1];
        if pivot.abs() < PIVOT_FLOOR {
            return Err(Error::SingularPivot { row: i });
        }
        c[i] = if i + 1 < n { sys.sup[i] / pivot } else { 0.0 };
        d[i] = (sys.rhs[i] - sys.sub[i] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Quadrature point inside interval `left..left+1` at local coordinate `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct LoadPoint {
    left: usize,
    theta: f64,
    /// `omega f(r) r^{N-1}` times the quadrature weight.
    weight: f64,
}

const HALF_CELL_POINTS: usize = 4;

/// Geometry, coefficient and source data shared by every Picard step of one level.
#[derive(Debug, Clone)]
pub struct LevelDiscretization<'a> {
    mesh: &'a RadialMesh,
    level: u32,
    truncation: Option<u32>,
    gamma: f64,
    p: f64,
    /// `omega a(r_f) r_f^{N-1} / h` per face.
    face_base: Vec<f64>,
    /// `int f` over each dual cell.
    source_cells: Vec<f64>,
    /// `T_n(fbar_i) / fbar_i` per cell, 1 where the cell average is not clipped.
    clip: Vec<f64>,
    /// Quadrature of `f r^{N-1}` over the two half-cells of every dual cell.
    points: Vec<Vec<LoadPoint>>,
}

/// Exact (or quadrature, for smooth manufactured data) per-cell source integrals.
pub fn source_cell_integrals(mesh: &RadialMesh, source: &SourceSpec) -> Result<Vec<f64>> {
    let dim = mesh.dimension();
    match *source {
        SourceSpec::Constant { value } => Ok(mesh.cell_volumes().iter().map(|v| value * v).collect()),
        SourceSpec::RadialPower { amplitude, a_exp } => mesh.integrate_power_source(amplitude, a_exp),
        SourceSpec::Manufactured { .. } => Ok(mesh.integrate_smooth(|r| source.eval(dim, r))),
    }
}

/// Quadrature points for `int_a^b f(r) g(r) r^{N-1} dr` on a half-cell inside
/// interval `left`. Power-law and constant sources use `s = r^{N - a_exp}`, so
/// the weights integrate `f r^{N-1}` exactly.
fn half_cell_points(
    mesh: &RadialMesh,
    source: &SourceSpec,
    left: usize,
    a: f64,
    b: f64,
    rule: &(Vec<f64>, Vec<f64>),
) -> Vec<LoadPoint> {
    let dim = mesh.dimension();
    let sphere = mesh.sphere_area();
    let (r0, h) = (mesh.nodes()[left], mesh.spacing(left));
    let (xs, ws) = rule;
    let power = match *source {
        SourceSpec::Constant { value } => Some((value, 0.0)),
        SourceSpec::RadialPower { amplitude, a_exp } => Some((amplitude, a_exp)),
        SourceSpec::Manufactured { .. } => None,
    };
    xs.iter()
        .zip(ws)
        .map(|(&x, &w)| {
            let (r, weight) = match power {
                Some((amp, a_exp)) => {
                    let k = f64::from(dim) - a_exp;
                    let (sa, sb) = (a.powf(k), b.powf(k));
                    let s = 0.5 * (sa + sb) + 0.5 * (sb - sa) * x;
                    (s.powf(1.0 / k), sphere * amp / k * 0.5 * (sb - sa) * w)
                }
                None => {
                    let r = 0.5 * (a + b) + 0.5 * (b - a) * x;
                    let f = source.eval(dim, r);
                    (r, sphere * f * r.powi(dim as i32 - 1) * 0.5 * (b - a) * w)
                }
            };
            LoadPoint { left, theta: ((r - r0) / h).clamp(0.0, 1.0), weight }
        })
        .collect()
}

impl<'a> LevelDiscretization<'a> {
    pub fn new(mesh: &'a RadialMesh, spec: &ProblemSpec, n: u32) -> Result<Self> {
        Self::with_truncation(mesh, spec, n, Some(n))
    }

    /// `truncation = None` replaces `T_n` by the identity while keeping the `1/n` shift.
    pub fn with_truncation(
        mesh: &'a RadialMesh,
        spec: &ProblemSpec,
        n: u32,
        truncation: Option<u32>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("level n must be >= 1".into()));
        }
        if mesh.dimension() != spec.dimension {
            return Err(Error::InvalidArgument(format!(
                "mesh dimension {} differs from problem dimension {}",
                mesh.dimension(),
                spec.dimension
            )));
        }
        let face_base = mesh
            .faces()
            .iter()
            .enumerate()
            .map(|(i, &rf)| spec.coeff.eval(rf) * mesh.face_areas()[i] / mesh.spacing(i))
            .collect();
        let last = mesh.cells();
        let rule = geometry::gauss_legendre_rule(HALF_CELL_POINTS);
        let points: Vec<Vec<LoadPoint>> = (0..=last)
            .map(|i| {
                if spec.source.is_zero() {
                    return Vec::new();
                }
                let (lo, hi) = mesh.cell_bounds(i);
                let r = mesh.nodes()[i];
                let mut pts = Vec::with_capacity(2 * HALF_CELL_POINTS);
                if i > 0 {
                    pts.extend(half_cell_points(mesh, &spec.source, i - 1, lo, r, &rule));
                }
                if i < last {
                    pts.extend(half_cell_points(mesh, &spec.source, i, r, hi, &rule));
                }
                pts
            })
            .collect();
        let source_cells = match spec.source {
            SourceSpec::Manufactured { .. } => {
                points.iter().map(|p| p.iter().map(|q| q.weight).sum()).collect()
            }
            _ => source_cell_integrals(mesh, &spec.source)?,
        };
        let clip = source_cells
            .iter()
            .zip(mesh.cell_volumes())
            .map(|(&total, &vol)| {
                let avg = total / vol;
                match truncation {
                    Some(n) if avg > f64::from(n) => truncate(avg, n) / avg,
                    _ => 1.0,
                }
            })
            .collect();
        Ok(Self {
            mesh,
            level: n,
            truncation,
            gamma: spec.gamma,
            p: spec.p,
            face_base,
            source_cells,
            clip,
            points,
        })
    }

    pub fn mesh(&self) -> &RadialMesh {
        self.mesh
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    fn trunc(&self, s: f64) -> f64 {
        match self.truncation {
            Some(n) => truncate(s, n),
            None => s,
        }
    }

    /// Source integral over cell `i` after truncating its cell average.
    pub fn truncated_source(&self, i: usize) -> f64 {
        self.clip[i] * self.source_cells[i]
    }

    /// Whether `T_n` clips the cell-averaged source anywhere.
    pub fn source_clipped(&self) -> bool {
        let n = f64::from(self.level);
        self.source_cells
            .iter()
            .zip(self.mesh.cell_volumes())
            .any(|(s, v)| s / v > n)
    }

    pub fn total_truncated_source(&self) -> f64 {
        (0..self.source_cells.len()).map(|i| self.truncated_source(i)).sum()
    }

    /// Face conductance `omega a r^{N-1} / (h (1 + T_n(ubar))^p)` with `ubar` the
    /// arithmetic mean of the two adjacent nodal values.
    pub fn face_coefficient(&self, u: &[f64], i: usize) -> f64 {
        let ubar = 0.5 * (u[i] + u[i + 1]);
        let damp = 1.0 + self.trunc(ubar).abs();
        self.face_base[i] / damp.powf(self.p)
    }

    /// Right-hand side of row `i`: the truncated source against
    /// `(u~ + 1/n)^{-gamma}` over the dual cell, with `u~` the piecewise-linear
    /// interpolant of the frozen nodal values.
    pub fn load(&self, u: &[f64], i: usize) -> f64 {
        if self.clip[i] == 0.0 {
            return 0.0;
        }
        let shift = 1.0 / f64::from(self.level);
        let sum: f64 = self.points[i]
            .iter()
            .map(|q| {
                let ui = (1.0 - q.theta) * u[q.left] + q.theta * u[q.left + 1];
                q.weight * (ui + shift).powf(-self.gamma)
            })
            .sum();
        self.clip[i] * sum
    }

    /// Assemble with the full nodal vector `frozen` (boundary value included).
    pub fn assemble(&self, frozen: &[f64]) -> Result<TridiagonalSystem> {
        let nodes = self.mesh.nodes().len();
        if frozen.len() != nodes {
            return Err(Error::InvalidArgument(format!(
                "frozen field has {} values, mesh has {nodes} nodes",
                frozen.len()
            )));
        }
        if let Some((node, &value)) = frozen.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::NegativeFrozen { node, value });
        }
        let m = nodes - 1;
        let k: Vec<f64> = (0..m).map(|i| self.face_coefficient(frozen, i)).collect();
        let mut sys = TridiagonalSystem {
            sub: vec![0.0; m],
            diag: vec![0.0; m],
            sup: vec![0.0; m],
            rhs: vec![0.0; m],
        };
        for i in 0..m {
            let mut diag = k[i];
            if i > 0 {
                sys.sub[i] = -k[i - 1];
                diag += k[i - 1];
            }
            if i + 1 < m {
                sys.sup[i] = -k[i];
            }
            sys.diag[i] = diag;
            sys.rhs[i] = self.load(frozen, i);
        }
        Ok(sys)
    }

    /// One application of the frozen-coefficient map; returns all nodal values.
    pub fn apply_map(&self, frozen: &[f64]) -> Result<Vec<f64>> {
        let sys = self.assemble(frozen)?;
        let mut w = solve_tridiagonal(&sys)?;
        w.push(0.0);
        Ok(w)
    }
}

pub fn assemble_frozen_system(
    mesh: &RadialMesh,
    spec: &ProblemSpec,
    n: u32,
    frozen: &DiscreteField,
) -> Result<TridiagonalSystem> {
    LevelDiscretization::new(mesh, spec, n)?.assemble(frozen.values())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Relative sup-norm tolerance on the undamped fixed-point update.
    pub tol_fix: f64,
    pub max_iter: usize,
    /// Initial damping; halved whenever the update grows, down to `min_damping`.
    pub damping: f64,
    pub min_damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol_fix: 1e-10, max_iter: 500, damping: 1.0, min_damping: 1.0 / 16.0 }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_fix > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidArgument("tol_fix must be > 0 and max_iter >= 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0)
            || !(self.min_damping > 0.0 && self.min_damping <= self.damping)
        {
            return Err(Error::InvalidArgument(
                "damping must satisfy 0 < min_damping <= damping <= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub field: DiscreteField,
    pub level: u32,
    pub iterations: usize,
    pub final_change: f64,
    pub truncation_active: bool,
    pub interior_min: f64,
}

fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    let diff = new.iter().zip(old).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let scale = new.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Damped Picard iteration `u <- (1 - lambda) u + lambda S(u)` at level `n`.
pub fn picard_solve(
    mesh: &RadialMesh,
    spec: &ProblemSpec,
    n: u32,
    init: &DiscreteField,
    opts: &SolverOptions,
) -> Result<SolveOutcome> {
    opts.validate()?;
    let disc = LevelDiscretization::new(mesh, spec, n)?;
    if init.len() != mesh.nodes().len() {
        return Err(Error::InvalidArgument("initial field does not match the mesh".into()));
    }
    let mut u = init.values().to_vec();
    if let Some(last) = u.last_mut() {
        *last = 0.0;
    }
    let mut lambda = opts.damping;
    let mut prev_change = f64::INFINITY;
    let mut change = f64::INFINITY;

    for iter in 1..=opts.max_iter {
        let s = disc.apply_map(&u)?;
        change = relative_change(&s, &u);
        let min = s.iter().copied().fold(f64::INFINITY, f64::min);
        if change <= opts.tol_fix {
            if min < 0.0 {
                return Err(Error::ClampActive { level: n, min });
            }
            let field = DiscreteField::from_values_unchecked(s);
            let truncation_active = field.max() >= f64::from(n) || disc.source_clipped();
            let interior_min = mesh::interior_min(mesh, &field, DEFAULT_RHO);
            return Ok(SolveOutcome {
                field,
                level: n,
                iterations: iter,
                final_change: change,
                truncation_active,
                interior_min,
            });
        }
        if change > prev_change {
            lambda = (0.5 * lambda).max(opts.min_damping);
        }
        prev_change = change;
        for (ui, si) in u.iter_mut().zip(&s) {
            *ui = ((1.0 - lambda) * *ui + lambda * si).max(0.0);
        }
    }
    Err(Error::NonConvergence { level: n, iterations: opts.max_iter, last_change: change })
}

/// Solve each level of `schedule`, warm-starting from the previous level.
pub fn continuation_sequence(
    mesh: &RadialMesh,
    spec: &ProblemSpec,
    schedule: &[u32],
    opts: &SolverOptions,
) -> Result<(Vec<SolveOutcome>, NormTrace)> {
    if schedule.is_empty() || schedule[0] == 0 || schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "schedule must be non-empty, strictly increasing and start at n >= 1".into(),
        ));
    }
    let mut outcomes: Vec<SolveOutcome> = Vec::with_capacity(schedule.len());
    let mut trace = NormTrace::new(mesh.cells());
    for &n in schedule {
        let init = outcomes
            .last()
            .map(|o| o.field.clone())
            .unwrap_or_else(|| DiscreteField::zeros(mesh));
        let outcome = picard_solve(mesh, spec, n, &init, opts)?;
        trace.push(TraceRow::measure(mesh, spec, &outcome)?);
        outcomes.push(outcome);
    }
    Ok((outcomes, trace))
}
