use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension must be at least 3, got {0}")]
    DimensionTooSmall(u32),
    #[error("invalid problem: {0}")]
    InvalidSpec(String),
    #[error("source r^-{a_exp} is not integrable on the unit ball in dimension {dim}")]
    NotIntegrable { a_exp: f64, dim: u32 },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("frozen field is negative at node {node} ({value})")]
    NegativeFrozen { node: usize, value: f64 },
    #[error("singular pivot at row {row}")]
    SingularPivot { row: usize },
    #[error("fixed-point iteration at level {level} did not converge after {iterations} iterations (last change {last_change:e})")]
    NonConvergence { level: u32, iterations: usize, last_change: f64 },
    #[error("negative-part clamp active at the converged iterate of level {level} (min {min:e})")]
    ClampActive { level: u32, min: f64 },
    #[error("test function support reaches a region where the field is below {floor:e} (node {node})")]
    DivisionHazard { node: usize, floor: f64 },
    #[error("check not applicable: {0}")]
    WrongRegime(String),
    #[error("meshes differ between compared outcomes")]
    MeshMismatch,
}
