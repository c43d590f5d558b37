//! Declarative scenarios, barrier checks, convergence studies and the
//! acceptance verification suite.

mod builtin;
mod checks;
mod config;
mod convergence;
mod runner;
pub mod verify;

pub use builtin::{
    arrival_problem, builtin, convergence_problem, flagship_problem, ARRIVAL_DELTA, BUILTIN_NAMES,
};
pub use checks::{
    barrier_check_bracket, barrier_check_memory, comparison_check, CheckOutcome, MemoryBarrier,
    BRACKET_BAND, COMPARISON_TOLERANCE, MEMORY_SLACK,
};
pub use config::{
    apply_override, AnalysisConfig, BarrierKind, OrderRole, ProblemConfig, ScenarioConfig,
    ThresholdConfig, SCHEMA_VERSION,
};
pub use convergence::{convergence_study, Centering, ConvergenceRow, ConvergenceTable};
pub use runner::{config_hash, run_scenario, EmittedFile, RunManifest, RunStatus, MANIFEST_NAME};
