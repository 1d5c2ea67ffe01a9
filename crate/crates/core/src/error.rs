use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of a metric.
    #[error("domain error: {0}")]
    Domain(String),

    /// Vectors or allocations whose shape does not match the scenario.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The service would still occupy track after the end of the horizon.
    #[error("service {ru_id}/{service_id} leaves segment {segment_id} at minute {exit_minute}, past horizon {horizon}")]
    HorizonExceeded {
        ru_id: u32,
        service_id: u32,
        segment_id: u32,
        exit_minute: u32,
        horizon: u32,
    },

    #[error("departure at minute {departure} is outside the horizon [0, {horizon})")]
    DepartureOutsideHorizon { departure: i64, horizon: u32 },

    #[error("scenario is invalid ({} violation(s)): {}", .0.len(), join_violations(.0))]
    InvalidScenario(Vec<Violation>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
