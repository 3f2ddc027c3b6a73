//! Scenario files, the expression language used inside them, and the runner that
//! writes trajectory, front and diagnostics files.

pub mod expr;
pub mod run;
pub mod scenario;

pub use run::{run_scenario, RunError, RunOptions, RunSummary};
pub use scenario::{deserialize_scenario, parse_scenario, Scenario, ScenarioError};
