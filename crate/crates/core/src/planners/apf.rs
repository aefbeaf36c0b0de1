//! Classical APF and RVF: fixed-length steps along the normalized force.

use crate::geometry::{distance, in_physical_collision, Obstacle, Path, Vec2};
use crate::params::PlannerParams;
use crate::potentials::{quad_gradient, vortex_force};

use super::{Budget, PlanRequest, PlanResult, PlanStatus};

/// Below this force magnitude the descent is considered stalled.
const STALL_FORCE: f64 = 1e-9;

pub fn plan_apf(req: &PlanRequest) -> PlanResult {
    descend(req, |p, obstacles, params| {
        quad_gradient(p, req.target, obstacles, params).ok().map(|f| f.vector())
    })
}

pub fn plan_rvf(req: &PlanRequest) -> PlanResult {
    descend(req, |p, obstacles, params| {
        vortex_force(p, req.target, obstacles, params, params.spin)
            .ok()
            .map(|f| f.vector())
    })
}

/// Shared descent loop. `force` returns `None` on a singular evaluation.
///
/// Ends with `NoPath` when the force vanishes or the next step would touch a
/// known physical obstacle. There is no escape from a local minimum: a walk
/// that oscillates around one runs into the step or time budget.
fn descend<F>(req: &PlanRequest, force: F) -> PlanResult
where
    F: Fn(Vec2, &[Obstacle], &PlannerParams) -> Option<Vec2>,
{
    let params = &req.params;
    let mut budget = Budget::new(params);
    let mut path = Path::from_start(req.start);
    let mut pos = req.start;
    let mut evals = 0u64;

    // Obstacles beyond their influence distance contribute exactly zero.
    let mut near: Vec<Obstacle> = Vec::with_capacity(req.known_obstacles.len());
    loop {
        if distance(pos, req.target) < params.goal_margin {
            return PlanResult::new(PlanStatus::Reached, path, evals);
        }
        if budget.exhausted() {
            return PlanResult::new(PlanStatus::Timeout, path, evals);
        }
        near.clear();
        near.extend(req.known_obstacles.iter().filter(|o| {
            let reach = params.quad_influence(o) + params.step_size;
            (pos - o.center).norm_squared() <= reach * reach
        }));
        evals += 1;
        let Some(f) = force(pos, &near, params) else {
            return PlanResult::new(PlanStatus::NoPath, path, evals);
        };
        let Some(dir) = f.normalized().filter(|_| f.norm() >= STALL_FORCE) else {
            return PlanResult::new(PlanStatus::NoPath, path, evals);
        };
        let next = pos + dir * params.step_size;
        if in_physical_collision(next, params.rover_radius, &near) {
            return PlanResult::new(PlanStatus::NoPath, path, evals);
        }
        pos = next;
        path.push(pos);
    }
}
