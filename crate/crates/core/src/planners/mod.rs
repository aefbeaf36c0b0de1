//! The five planners behind one request/result interface.
//!
//! | name     | method                                                        |
//! |----------|---------------------------------------------------------------|
//! | `apf`    | normalized descent of the quadratic potential                 |
//! | `rvf`    | descent along the vortex field (obstacle gradients rotated)   |
//! | `crbapf` | bacteria points on the Gaussian field, random walk at minima  |
//! | `rapf`   | target-aligned bacteria, artificial obstacles at minima       |
//! | `astar`  | 8-connected grid search with an octile heuristic              |

mod apf;
pub mod astar;
mod bacteria;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, Obstacle, Path, Rect, Vec2};
use crate::params::PlannerParams;
use crate::potentials::Potential;

pub use apf::{plan_apf, plan_rvf};
pub use astar::plan_astar;
pub use bacteria::{plan_crbapf, plan_rapf};

#[derive(Debug, Clone, PartialEq)]
pub struct PlanRequest {
    pub start: Vec2,
    pub target: Vec2,
    pub known_obstacles: Vec<Obstacle>,
    pub params: PlannerParams,
    pub rng_seed: u64,
    /// Search area of the A* grid. Defaults to the bounding box of start,
    /// target and obstacles grown by [`DEFAULT_GRID_MARGIN`].
    pub bounds: Option<Rect>,
}

pub const DEFAULT_GRID_MARGIN: f64 = 2.0;

impl PlanRequest {
    pub fn new(start: Vec2, target: Vec2, known_obstacles: Vec<Obstacle>, params: PlannerParams) -> Self {
        Self {
            start,
            target,
            known_obstacles,
            params,
            rng_seed: 0,
            bounds: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_bounds(mut self, bounds: Rect) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.target.is_finite()) {
            return Err(Error::Domain("start and target must be finite".into()));
        }
        if self.start == self.target {
            return Err(Error::Domain("start and target coincide".into()));
        }
        self.params.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanStatus {
    Reached,
    NoPath,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanResult {
    pub status: PlanStatus,
    pub path: Path,
    pub artificial_obstacles: Vec<Obstacle>,
    pub potential_evals: u64,
    pub wall_time: f64,
}

impl PlanResult {
    fn new(status: PlanStatus, path: Path, potential_evals: u64) -> Self {
        Self {
            status,
            path,
            artificial_obstacles: Vec::new(),
            potential_evals,
            wall_time: 0.0,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    Apf,
    Rvf,
    Crbapf,
    Rapf,
    Astar,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 5] = [
        PlannerKind::Apf,
        PlannerKind::Rvf,
        PlannerKind::Crbapf,
        PlannerKind::Rapf,
        PlannerKind::Astar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Apf => "apf",
            PlannerKind::Rvf => "rvf",
            PlannerKind::Crbapf => "crbapf",
            PlannerKind::Rapf => "rapf",
            PlannerKind::Astar => "astar",
        }
    }

    /// Display label used in summary tables.
    pub fn label(self) -> &'static str {
        match self {
            PlannerKind::Apf => "APF",
            PlannerKind::Rvf => "RVF",
            PlannerKind::Crbapf => "CRBAPF*",
            PlannerKind::Rapf => "RAPF",
            PlannerKind::Astar => "A*",
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlannerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "apf" => Ok(PlannerKind::Apf),
            "rvf" => Ok(PlannerKind::Rvf),
            "crbapf" | "crbapf*" => Ok(PlannerKind::Crbapf),
            "rapf" => Ok(PlannerKind::Rapf),
            "astar" | "a*" => Ok(PlannerKind::Astar),
            _ => Err(Error::UnknownPlanner(s.to_string())),
        }
    }
}

/// Runs the named planner and stamps the wall time.
pub fn plan(kind: PlannerKind, req: &PlanRequest) -> Result<PlanResult> {
    req.validate()?;
    let t0 = Instant::now();
    let mut result = match kind {
        PlannerKind::Apf => plan_apf(req),
        PlannerKind::Rvf => plan_rvf(req),
        PlannerKind::Crbapf => plan_crbapf(req),
        PlannerKind::Rapf => plan_rapf(req),
        PlannerKind::Astar => plan_astar(req, req.params.astar_cell),
    };
    result.wall_time = t0.elapsed().as_secs_f64();
    Ok(result)
}

/// Picks, among candidates whose potential is strictly lower than the robot's,
/// the one closest to the target (first wins on ties). `None` signals a local
/// minimum.
pub fn select_bacteria(
    robot_potential: Potential,
    candidates: &[Vec2],
    target: Vec2,
    mut potential: impl FnMut(Vec2) -> Potential,
) -> Option<Vec2> {
    let scored: Vec<(Vec2, Potential)> = candidates.iter().map(|&c| (c, potential(c))).collect();
    select_scored(robot_potential, &scored, target).map(|i| scored[i].0)
}

/// Index form of [`select_bacteria`] over pre-evaluated candidates.
pub fn select_scored(robot_potential: Potential, scored: &[(Vec2, Potential)], target: Vec2) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &(c, j)) in scored.iter().enumerate() {
        if !j.is_lower_than(robot_potential) {
            continue;
        }
        let d = distance(c, target);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalMinimumEvent {
    pub position: Vec2,
    pub step_index: usize,
}

/// Fires when no candidate was selected, or when `current` lies within
/// `radius` of any of the `history` positions.
pub fn detect_local_minimum(
    history: &[Vec2],
    current: Vec2,
    selection: Option<Vec2>,
    radius: f64,
    step_index: usize,
) -> Option<LocalMinimumEvent> {
    let revisit = history.iter().any(|&h| distance(h, current) < radius);
    (selection.is_none() || revisit).then_some(LocalMinimumEvent {
        position: current,
        step_index,
    })
}

/// Sliding-window form of [`detect_local_minimum`]: remembers the last
/// `window` positions.
#[derive(Debug, Clone)]
pub struct LocalMinimumDetector {
    window: usize,
    radius: f64,
    history: VecDeque<Vec2>,
    step: usize,
}

impl LocalMinimumDetector {
    pub fn new(window: usize, radius: f64) -> Self {
        Self {
            window,
            radius,
            history: VecDeque::with_capacity(window + 1),
            step: 0,
        }
    }

    /// Window `4 N_B`, radius `rho_b / 2`.
    pub fn for_bacteria(params: &PlannerParams) -> Self {
        Self::new(4 * params.n_bacteria, params.rho_b / 2.0)
    }

    /// Checks `current` against the window, then records it.
    pub fn observe(&mut self, current: Vec2, selection: Option<Vec2>) -> Option<LocalMinimumEvent> {
        let revisit = self.history.iter().any(|&h| distance(h, current) < self.radius);
        let event = (selection.is_none() || revisit).then_some(LocalMinimumEvent {
            position: current,
            step_index: self.step,
        });
        self.history.push_back(current);
        if self.history.len() > self.window {
            self.history.pop_front();
        }
        self.step += 1;
        event
    }

    pub fn clear(&mut self) {
        self.history.clear();
    }
}

/// Iteration and wall-clock limits of one planner call.
pub(crate) struct Budget {
    t0: Instant,
    max_time: f64,
    max_steps: usize,
    steps: usize,
}

impl Budget {
    pub(crate) fn new(params: &PlannerParams) -> Self {
        Self {
            t0: Instant::now(),
            max_time: params.max_time,
            max_steps: params.max_plan_steps,
            steps: 0,
        }
    }

    /// Counts one iteration; true once either limit is reached.
    pub(crate) fn exhausted(&mut self) -> bool {
        if self.steps >= self.max_steps {
            return true;
        }
        self.steps += 1;
        // Checking the clock every iteration is cheap next to a potential sweep.
        self.t0.elapsed().as_secs_f64() >= self.max_time
    }
}
