//! Per-level records of every norm the regularity claims talk about.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{grad_lp_seminorm, lp_norm, RadialMesh};
use crate::model::ProblemSpec;
use crate::solver::{LevelDiscretization, SolveOutcome, DEFAULT_RHO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormKey {
    L2,
    Linf,
    /// `L^{m**(gamma+1-p)}`.
    Lmss,
    H1,
    /// Gradient in `L^sigma`.
    LsigmaGrad,
    H1Interior,
    /// H^1 seminorm of `u^{(gamma+1-p)/2}`.
    PowerH1,
}

impl NormKey {
    pub const ALL: [NormKey; 7] = [
        NormKey::L2,
        NormKey::Linf,
        NormKey::Lmss,
        NormKey::H1,
        NormKey::LsigmaGrad,
        NormKey::H1Interior,
        NormKey::PowerH1,
    ];

    pub fn column(&self) -> &'static str {
        match self {
            NormKey::L2 => "L2",
            NormKey::Linf => "Linf",
            NormKey::Lmss => "Lmss",
            NormKey::H1 => "H1",
            NormKey::LsigmaGrad => "LsigmaGrad",
            NormKey::H1Interior => "H1interior",
            NormKey::PowerH1 => "PowerH1",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n: u32,
    pub cells: usize,
    pub l2: f64,
    pub linf: f64,
    pub lmss: Option<f64>,
    pub h1: f64,
    pub lsigma_grad: Option<f64>,
    pub h1_interior: f64,
    pub power_h1: Option<f64>,
    /// Exact `int f`.
    pub int_f: f64,
    /// `int T_n(f)` as seen by the discretization.
    pub int_truncated_f: f64,
    pub interior_min: f64,
    pub truncation_active: bool,
    pub iterations: usize,
    /// Seminorm of `(1+u)^{(delta+1-p)/2} - 1`; diagnostic only.
    pub delta_power_h1: Option<f64>,
    /// Seminorm of `(1+u)^{(theta+1-p)/2} - 1`; diagnostic only.
    pub theta_power_h1: Option<f64>,
}

impl TraceRow {
    pub fn measure(mesh: &RadialMesh, spec: &ProblemSpec, outcome: &SolveOutcome) -> Result<Self> {
        Self::measure_with_window(mesh, spec, outcome, DEFAULT_RHO)
    }

    pub fn measure_with_window(
        mesh: &RadialMesh,
        spec: &ProblemSpec,
        outcome: &SolveOutcome,
        rho: f64,
    ) -> Result<Self> {
        let u = &outcome.field;
        let table = spec.exponents();
        let lmss = match table.lebesgue_claim_exponent(spec.p, spec.gamma) {
            Some(s) if s >= 1.0 => Some(lp_norm(mesh, u, s)?),
            _ => None,
        };
        let lsigma_grad = match table.sigma {
            Some(s) if s >= 1.0 => Some(grad_lp_seminorm(mesh, u, s, 1.0)?),
            _ => None,
        };
        let e = spec.power_exponent();
        let power_h1 = if e > 0.0 {
            Some(grad_lp_seminorm(mesh, &u.map(|v| v.max(0.0).powf(e)), 2.0, 1.0)?)
        } else {
            None
        };
        let shifted = |exp: Option<f64>| -> Result<Option<f64>> {
            match exp {
                Some(d) => {
                    let q = 0.5 * (d + 1.0 - spec.p);
                    let g = u.map(|v| (1.0 + v).powf(q) - 1.0);
                    Ok(Some(grad_lp_seminorm(mesh, &g, 2.0, 1.0)?))
                }
                None => Ok(None),
            }
        };
        let disc = LevelDiscretization::new(mesh, spec, outcome.level)?;
        Ok(Self {
            n: outcome.level,
            cells: mesh.cells(),
            l2: lp_norm(mesh, u, 2.0)?,
            linf: u.sup_norm(),
            lmss,
            h1: grad_lp_seminorm(mesh, u, 2.0, 1.0)?,
            lsigma_grad,
            h1_interior: grad_lp_seminorm(mesh, u, 2.0, rho)?,
            power_h1,
            int_f: spec.source.total_integral(spec.dimension),
            int_truncated_f: disc.total_truncated_source(),
            interior_min: outcome.interior_min,
            truncation_active: outcome.truncation_active,
            iterations: outcome.iterations,
            delta_power_h1: shifted(table.delta)?,
            theta_power_h1: shifted(table.theta)?,
        })
    }

    pub fn get(&self, key: NormKey) -> Option<f64> {
        match key {
            NormKey::L2 => Some(self.l2),
            NormKey::Linf => Some(self.linf),
            NormKey::Lmss => self.lmss,
            NormKey::H1 => Some(self.h1),
            NormKey::LsigmaGrad => self.lsigma_grad,
            NormKey::H1Interior => Some(self.h1_interior),
            NormKey::PowerH1 => self.power_h1,
        }
    }
}

/// Rows of one continuation run on one mesh, ordered by level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormTrace {
    cells: usize,
    rows: Vec<TraceRow>,
}

impl NormTrace {
    pub fn new(cells: usize) -> Self {
        Self { cells, rows: Vec::new() }
    }

    pub fn from_rows(cells: usize, rows: Vec<TraceRow>) -> Self {
        Self { cells, rows }
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub(crate) fn push(&mut self, row: TraceRow) {
        debug_assert!(self.rows.last().is_none_or(|r| r.n < row.n));
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Stabilized,
    Growing,
    Inconclusive,
}

/// Log-log slope limits used by [`classify_trace`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityThresholds {
    pub stabilized_below: f64,
    pub growing_above: f64,
}

impl Default for StabilityThresholds {
    fn default() -> Self {
        Self { stabilized_below: 0.05, growing_above: 0.3 }
    }
}

/// Least-squares slope of `log(norm)` against `log(n)` over the last three rows.
pub fn trace_slope(trace: &NormTrace, key: NormKey) -> Result<f64> {
    let rows = trace.rows();
    if rows.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "trace classification needs at least 4 rows, got {}",
            rows.len()
        )));
    }
    let tail = &rows[rows.len() - 3..];
    let mut pts = Vec::with_capacity(3);
    for r in tail {
        let v = r.get(key).ok_or_else(|| {
            Error::InvalidArgument(format!("norm {} undefined for this problem", key.column()))
        })?;
        pts.push((f64::from(r.n).ln(), v));
    }
    if pts.iter().all(|&(_, v)| v == pts[0].1) {
        return Ok(0.0);
    }
    if pts.iter().any(|&(_, v)| !(v > 0.0)) {
        return Ok(f64::NAN);
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

pub fn classify_trace(
    trace: &NormTrace,
    key: NormKey,
    thresholds: &StabilityThresholds,
) -> Result<Stability> {
    let slope = trace_slope(trace, key)?;
    Ok(if slope < thresholds.stabilized_below {
        Stability::Stabilized
    } else if slope > thresholds.growing_above {
        Stability::Growing
    } else {
        Stability::Inconclusive
    })
}
