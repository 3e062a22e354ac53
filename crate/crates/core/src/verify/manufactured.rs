//! Manufactured solution `u* = 1 - r^2` for the level-n problem with `a = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{DiscreteField, RadialMesh};
use crate::model::{manufactured_operator, ProblemSpec};
use crate::solver::{picard_solve, SolverOptions};
use crate::verify::checks::{convergence_order, ObservedOrder};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub dimension: u32,
    pub p: f64,
    pub gamma: f64,
    pub n: u32,
}

impl ManufacturedCase {
    /// Rejects levels at which `T_n` would clip the manufactured source.
    pub fn new(dimension: u32, p: f64, gamma: f64, n: u32) -> Result<Self> {
        let case = Self { dimension, p, gamma, n };
        // build the spec for its validation only
        ProblemSpec::manufactured(dimension, p, gamma, n)?;
        let peak = case.source_sup();
        if !(peak < f64::from(n)) {
            return Err(Error::InvalidArgument(format!(
                "manufactured source reaches {peak:.6} >= n = {n}; truncation would alter it"
            )));
        }
        Ok(case)
    }

    pub fn exact(&self, r: f64) -> f64 {
        1.0 - r * r
    }

    pub fn operator(&self, r: f64) -> f64 {
        manufactured_operator(self.dimension, self.p, r)
    }

    pub fn source(&self, r: f64) -> f64 {
        (self.exact(r) + 1.0 / f64::from(self.n)).powf(self.gamma) * self.operator(r)
    }

    /// Sampled supremum of the source on `[0, 1]` (the source is smooth).
    pub fn source_sup(&self) -> f64 {
        const SAMPLES: usize = 4000;
        (0..=SAMPLES)
            .map(|k| self.source(k as f64 / SAMPLES as f64))
            .fold(0.0, f64::max)
    }

    pub fn spec(&self) -> ProblemSpec {
        ProblemSpec::manufactured(self.dimension, self.p, self.gamma, self.n)
            .expect("validated in ManufacturedCase::new")
    }

    /// Sup-norm nodal error of the converged discrete solution on a uniform mesh.
    pub fn sup_error(&self, cells: usize, opts: &SolverOptions) -> Result<f64> {
        let mesh = RadialMesh::new(self.dimension, cells, 1.0)?;
        let init = DiscreteField::zeros(&mesh);
        let out = picard_solve(&mesh, &self.spec(), self.n, &init, opts)?;
        Ok(mesh
            .nodes()
            .iter()
            .zip(out.field.values())
            .map(|(&r, &u)| (u - self.exact(r)).abs())
            .fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub cells: Vec<usize>,
    pub errors: Vec<f64>,
    pub order: ObservedOrder,
}

/// Errors on each mesh; the order comes from the last three.
pub fn manufactured_study(
    case: &ManufacturedCase,
    cells: &[usize],
    opts: &SolverOptions,
) -> Result<ConvergenceStudy> {
    if cells.len() < 3 {
        return Err(Error::InvalidArgument("convergence study needs at least three meshes".into()));
    }
    let errors = cells
        .iter()
        .map(|&c| case.sup_error(c, opts))
        .collect::<Result<Vec<_>>>()?;
    let k = errors.len();
    let order = convergence_order([errors[k - 3], errors[k - 2], errors[k - 1]]);
    Ok(ConvergenceStudy { cells: cells.to_vec(), errors, order })
}
