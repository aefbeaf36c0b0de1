use thiserror::Error;

use crate::geometry::Vec2;

#[derive(Debug, Error)]
pub enum Error {
    /// A quadratic potential was evaluated exactly on an obstacle center.
    #[error("potential diverges at {0:?}: position coincides with an obstacle center")]
    Singular(Vec2),

    #[error("degenerate direction: alignment point coincides with the robot position")]
    DegenerateDirection,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("unknown planner `{0}` (expected one of apf, rvf, crbapf, rapf, astar)")]
    UnknownPlanner(String),

    #[error("unknown scenario preset `{0}` (expected A, B or C)")]
    UnknownPreset(String),

    #[error("obstacle placement failed after {attempts} attempts")]
    Placement { attempts: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("malformed file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
