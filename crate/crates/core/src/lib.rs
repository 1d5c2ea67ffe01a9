//! Fairness-aware allocation of contested railway capacity.
//!
//! Railway undertakings file service requests weighted by importance; the
//! infrastructure manager evolves candidate timetables with a genetic
//! algorithm, repairs track conflicts in favour of the most disadvantaged
//! undertaking, and scores each timetable as revenue times an equity index
//! (Jain, Gini or Atkinson) of the granted importance.
//!
//! Module map:
//!
//! - [`model`]: undertakings, requests, scenarios and allocations
//! - [`fairness`]: equity indices, inequity and assigned-share measures
//! - [`infrastructure`]: track occupancy and the conflict graph
//! - [`allocator`]: conflict repair, revenue and the objective
//! - [`ga`]: the seeded genetic algorithm
//! - [`scenarios`]: generators for the capacity scenarios
//! - [`experiment`]: run records, studies and report files

pub mod allocator;
pub mod error;
pub mod experiment;
pub mod fairness;
pub mod ga;
pub mod infrastructure;
pub mod model;
pub mod scenarios;

pub use error::{Error, Result};
pub use fairness::{FairnessConfig, IndexKind};
pub use ga::{GaConfig, RunOutcome};
pub use model::{Allocation, Scenario, ServiceRef};
pub use scenarios::{make_scenario, ScenarioKind, ScenarioParams};
