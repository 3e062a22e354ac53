//! Radial grids on the unit ball and the discrete norms used to trace the
//! approximating solutions.
//!
//! Node `i` owns the dual cell `[r_{i-1/2}, r_{i+1/2}]` (clipped to `[0, 1]`), so
//! the origin node owns a small ball and the boundary node a half cell. Cell
//! volumes and face areas carry the exact `r^{N-1}` weight of the N-ball.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry;

pub const MIN_CELLS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialMesh {
    dimension: u32,
    nodes: Vec<f64>,
    faces: Vec<f64>,
    cell_volumes: Vec<f64>,
    face_areas: Vec<f64>,
    sphere: f64,
}

/// `int_lo^hi r^{k-1} dr` for `k > 0`.
fn power_moment(lo: f64, hi: f64, k: f64) -> f64 {
    (hi.powf(k) - lo.powf(k)) / k
}

impl RadialMesh {
    /// Graded mesh `r_i = (i / cells)^grading`.
    pub fn new(dimension: u32, cells: usize, grading: f64) -> Result<Self> {
        if cells < MIN_CELLS {
            return Err(Error::InvalidMesh(format!(
                "need at least {MIN_CELLS} cells, got {cells}"
            )));
        }
        if !(grading > 0.0) || !grading.is_finite() {
            return Err(Error::InvalidMesh(format!("grading must be positive, got {grading}")));
        }
        let nodes = (0..=cells)
            .map(|i| (i as f64 / cells as f64).powf(grading))
            .collect();
        Self::from_nodes(dimension, nodes)
    }

    pub(crate) fn from_nodes(dimension: u32, nodes: Vec<f64>) -> Result<Self> {
        if dimension < 3 {
            return Err(Error::DimensionTooSmall(dimension));
        }
        if nodes.len() < 2 || nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(Error::InvalidMesh("nodes must run from 0 to 1".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidMesh("nodes must be strictly increasing".into()));
        }
        let k = f64::from(dimension);
        let sphere = geometry::sphere_area(dimension);
        let faces: Vec<f64> = nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let face_areas = faces.iter().map(|&r| sphere * r.powf(k - 1.0)).collect();
        let last = nodes.len() - 1;
        let cell_volumes = (0..=last)
            .map(|i| {
                let (lo, hi) = Self::dual_bounds(&faces, i, last);
                sphere * power_moment(lo, hi, k)
            })
            .collect();
        Ok(Self { dimension, nodes, faces, cell_volumes, face_areas, sphere })
    }

    fn dual_bounds(faces: &[f64], i: usize, last: usize) -> (f64, f64) {
        let lo = if i == 0 { 0.0 } else { faces[i - 1] };
        let hi = if i == last { 1.0 } else { faces[i] };
        (lo, hi)
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    /// Number of intervals `M`; there are `M + 1` nodes.
    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    pub fn cell_volumes(&self) -> &[f64] {
        &self.cell_volumes
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    pub fn sphere_area(&self) -> f64 {
        self.sphere
    }

    /// Interval length `h_i = r_{i+1} - r_i`.
    pub fn spacing(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    /// Radial extent `[lo, hi]` of the dual cell owned by node `i`.
    pub fn cell_bounds(&self, i: usize) -> (f64, f64) {
        Self::dual_bounds(&self.faces, i, self.cells())
    }

    pub fn total_volume(&self) -> f64 {
        self.cell_volumes.iter().sum()
    }

    /// Exact per-cell integrals of `amplitude * r^{-a_exp}`, including the origin cell.
    pub fn integrate_power_source(&self, amplitude: f64, a_exp: f64) -> Result<Vec<f64>> {
        let k = f64::from(self.dimension) - a_exp;
        if !(k > 0.0) {
            return Err(Error::NotIntegrable { a_exp, dim: self.dimension });
        }
        Ok((0..self.nodes.len())
            .map(|i| {
                if amplitude == 0.0 {
                    return 0.0;
                }
                let (lo, hi) = self.cell_bounds(i);
                amplitude * self.sphere * power_moment(lo, hi, k)
            })
            .collect())
    }

    /// Per-cell integrals of a smooth radial function by Gauss-Legendre quadrature.
    pub fn integrate_smooth(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let k = self.dimension as i32 - 1;
        (0..self.nodes.len())
            .map(|i| {
                let (lo, hi) = self.cell_bounds(i);
                self.sphere * geometry::gauss_legendre(lo, hi, 8, |r| f(r) * r.powi(k))
            })
            .collect()
    }
}

/// Nodal values on a mesh. The last entry is the value at `r = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteField {
    values: Vec<f64>,
}

impl DiscreteField {
    pub fn new(mesh: &RadialMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.nodes().len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values, mesh has {} nodes",
                values.len(),
                mesh.nodes().len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value at node {i}")));
        }
        Ok(Self { values })
    }

    pub fn zeros(mesh: &RadialMesh) -> Self {
        Self { values: vec![0.0; mesh.nodes().len()] }
    }

    pub fn from_fn(mesh: &RadialMesh, f: impl Fn(f64) -> f64) -> Self {
        Self { values: mesh.nodes().iter().map(|&r| f(r)).collect() }
    }

    pub(crate) fn from_values_unchecked(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn check_exponent(s: f64) -> Result<()> {
    if !(s >= 1.0) {
        return Err(Error::InvalidArgument(format!("Lebesgue exponent must be >= 1, got {s}")));
    }
    Ok(())
}

/// `(sum_i |u_i|^s vol_i)^{1/s}`; `s = inf` gives the nodal max.
pub fn lp_norm(mesh: &RadialMesh, field: &DiscreteField, s: f64) -> Result<f64> {
    check_exponent(s)?;
    if s.is_infinite() {
        return Ok(field.sup_norm());
    }
    let sum: f64 = field
        .values()
        .iter()
        .zip(mesh.cell_volumes())
        .map(|(u, v)| u.abs().powf(s) * v)
        .sum();
    Ok(sum.powf(1.0 / s))
}

/// `(sum over faces with r_{i+1/2} <= window of |(u_{i+1}-u_i)/h_i|^s * area_i * h_i)^{1/s}`.
pub fn grad_lp_seminorm(
    mesh: &RadialMesh,
    field: &DiscreteField,
    s: f64,
    window: f64,
) -> Result<f64> {
    check_exponent(s)?;
    if !(window > 0.0) || window > 1.0 {
        return Err(Error::InvalidArgument(format!("window must lie in (0, 1], got {window}")));
    }
    let u = field.values();
    let sum: f64 = mesh
        .faces()
        .iter()
        .enumerate()
        .take_while(|(_, &rf)| rf <= window)
        .map(|(i, _)| {
            let h = mesh.spacing(i);
            ((u[i + 1] - u[i]) / h).abs().powf(s) * mesh.face_areas()[i] * h
        })
        .sum();
    Ok(sum.powf(1.0 / s))
}

/// Minimum nodal value over `r <= rho`.
pub fn interior_min(mesh: &RadialMesh, field: &DiscreteField, rho: f64) -> f64 {
    mesh.nodes()
        .iter()
        .zip(field.values())
        .take_while(|(&r, _)| r <= rho)
        .map(|(_, &u)| u)
        .fold(f64::INFINITY, f64::min)
}
