//! Potential-field path planners for planetary rovers, with a lunar terrain
//! generator, a closed-loop sensing simulator and a Monte Carlo benchmark.
//!
//! Planners: classical APF, RVF (rotated vector field), CRBAPF* (bacteria
//! points with random-walk escape), RAPF (aligned bacteria with artificial
//! obstacles at local minima) and an A* grid reference.

pub mod bench;
pub mod error;
pub mod fixtures;
pub mod metrics;
pub mod geometry;
pub mod params;
pub mod planners;
pub mod potentials;
pub mod sensor_sim;
pub mod terrain;

pub use error::{Error, Result};
pub use geometry::{Obstacle, ObstacleKind, Path, Rect, Scenario, Vec2, WorldSize};
pub use params::{PlannerParams, Spin};
pub use planners::{plan, PlanRequest, PlanResult, PlanStatus, PlannerKind};
pub use potentials::Potential;
