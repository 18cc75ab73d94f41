use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },
    #[error("cannot place agent {agent_id}: {reason}")]
    Placement { agent_id: u32, reason: String },
    #[error("point is {distance:.3} m from the reference path (limit {limit:.3} m)")]
    Projection { distance: f64, limit: f64 },
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("no feasible candidate trajectory; fallback required")]
    FallbackRequired,
    #[error("unknown vehicle model `{requested}`; valid ids: {valid}")]
    UnknownVehicle { requested: String, valid: String },
    #[error("unknown planner parameter set `{0}`")]
    UnknownPlannerConfig(String),
    #[error("trajectory contract violated: {0}")]
    Contract(String),
    #[error("vehicle dynamics diverged: {0}")]
    Dynamics(String),
    #[error("cannot compare runs: {0}")]
    Comparison(String),
    #[error("cannot aggregate grid: {0}")]
    Aggregation(String),
    #[error("cannot compute statistics: {0}")]
    Stats(String),
}

impl Error {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
