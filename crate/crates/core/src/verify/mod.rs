//! Executable checks of the regularity and comparison properties of the
//! approximating sequence.

pub mod checks;
pub mod experiment;
pub mod manufactured;
pub mod trace;

pub use checks::{
    check_energy_inequality, check_energy_tested, check_monotonicity, convergence_order, weak_residual, CheckResult,
    ObservedOrder,
};
pub use experiment::{acceptance_grid, run_experiment, ExperimentOutput, Protocol, VerdictReport};
pub use manufactured::{manufactured_study, ConvergenceStudy, ManufacturedCase};
pub use trace::{classify_trace, NormKey, NormTrace, Stability, StabilityThresholds, TraceRow};
