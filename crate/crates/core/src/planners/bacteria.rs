//! Bacteria-point planners on the Gaussian field: CRBAPF* and RAPF.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{distance, Obstacle, ObstacleKind, Path, Vec2};
use crate::potentials::{bacteria_points_into, ring_directions, GaussianField, Potential};

use super::{select_scored, Budget, LocalMinimumDetector, PlanRequest, PlanResult, PlanStatus};

/// How far the robot may drift before the nearby-source list is rebuilt.
const GATHER_SLACK: f64 = 0.5;

/// Evaluates the robot potential and one bacteria ring per step, restricting
/// the field to sources that can reach the ring. Sources out of reach add an
/// exact zero, so the restriction does not change any value.
struct Ring {
    field: GaussianField,
    near: Vec<usize>,
    /// Where `near` was gathered; `None` after the field changed.
    anchor: Option<Vec2>,
    directions: Vec<Vec2>,
    points: Vec<Vec2>,
    scored: Vec<(Vec2, Potential)>,
    n_bacteria: usize,
    rho_b: f64,
    evals: u64,
}

impl Ring {
    fn new(req: &PlanRequest) -> Self {
        Self {
            field: GaussianField::new(req.target, &req.known_obstacles, &req.params),
            near: Vec::new(),
            anchor: None,
            directions: ring_directions(req.params.n_bacteria),
            points: Vec::with_capacity(req.params.n_bacteria),
            scored: Vec::with_capacity(req.params.n_bacteria),
            n_bacteria: req.params.n_bacteria,
            rho_b: req.params.rho_b,
            evals: 0,
        }
    }

    /// Scores the ring around `pos`; returns the robot potential when asked.
    fn sweep(&mut self, pos: Vec2, align_to: Option<Vec2>, with_robot: bool) -> Potential {
        if self.anchor.is_none_or(|a| distance(a, pos) > GATHER_SLACK) {
            self.field.gather_near(pos, self.rho_b + GATHER_SLACK, &mut self.near);
            self.anchor = Some(pos);
        }
        bacteria_points_into(pos, &self.directions, self.rho_b, align_to, &mut self.points)
            .expect("alignment target differs from the robot position");
        self.scored.clear();
        for &b in &self.points {
            self.scored.push((b, self.field.eval_subset(b, &self.near)));
        }
        self.evals += self.n_bacteria as u64;
        if with_robot {
            self.evals += 1;
            self.field.eval_subset(pos, &self.near)
        } else {
            Potential::ZERO
        }
    }

    fn add_obstacle(&mut self, o: &Obstacle, params: &crate::params::PlannerParams) {
        self.field.push(o, params);
        self.anchor = None;
    }
}

/// CRBAPF*: unaligned bacteria ring; at a local minimum, `rw_steps` moves to
/// uniformly chosen finite-potential bacteria before resuming selection.
pub fn plan_crbapf(req: &PlanRequest) -> PlanResult {
    let params = &req.params;
    let mut budget = Budget::new(params);
    let mut rng = ChaCha8Rng::seed_from_u64(req.rng_seed);
    let mut ring = Ring::new(req);
    let mut detector = LocalMinimumDetector::for_bacteria(params);
    let mut path = Path::from_start(req.start);
    let mut pos = req.start;
    let mut finite = Vec::with_capacity(params.n_bacteria);

    loop {
        if distance(pos, req.target) < params.goal_margin {
            return PlanResult::new(PlanStatus::Reached, path, ring.evals);
        }
        if budget.exhausted() {
            return PlanResult::new(PlanStatus::Timeout, path, ring.evals);
        }
        let robot = ring.sweep(pos, None, true);
        let chosen = select_scored(robot, &ring.scored, req.target).map(|i| ring.scored[i].0);
        if detector.observe(pos, chosen).is_none() {
            pos = chosen.expect("detector fires when nothing is selected");
            path.push(pos);
            continue;
        }

        for k in 0..params.rw_steps {
            if k > 0 {
                if distance(pos, req.target) < params.goal_margin {
                    return PlanResult::new(PlanStatus::Reached, path, ring.evals);
                }
                if budget.exhausted() {
                    return PlanResult::new(PlanStatus::Timeout, path, ring.evals);
                }
                ring.sweep(pos, None, false);
            }
            finite.clear();
            finite.extend(ring.scored.iter().filter(|(_, j)| j.is_finite()).map(|(b, _)| *b));
            if finite.is_empty() {
                return PlanResult::new(PlanStatus::NoPath, path, ring.evals);
            }
            pos = finite[rng.random_range(0..finite.len())];
            path.push(pos);
        }
        detector.clear();
    }
}

/// RAPF: target-aligned ring; each local minimum becomes an artificial
/// obstacle of radius `rho_b` and planning restarts from the start.
pub fn plan_rapf(req: &PlanRequest) -> PlanResult {
    let params = &req.params;
    let mut budget = Budget::new(params);
    let mut ring = Ring::new(req);
    let mut detector = LocalMinimumDetector::for_bacteria(params);
    let mut path = Path::from_start(req.start);
    let mut pos = req.start;
    let mut artificial: Vec<Obstacle> = Vec::new();

    let finish = |status, path, evals, artificial: Vec<Obstacle>| PlanResult {
        artificial_obstacles: artificial,
        ..PlanResult::new(status, path, evals)
    };

    loop {
        if distance(pos, req.target) < params.goal_margin {
            return finish(PlanStatus::Reached, path, ring.evals, artificial);
        }
        if budget.exhausted() {
            return finish(PlanStatus::Timeout, path, ring.evals, artificial);
        }
        let robot = ring.sweep(pos, Some(req.target), true);
        let chosen = select_scored(robot, &ring.scored, req.target).map(|i| ring.scored[i].0);
        let Some(event) = detector.observe(pos, chosen) else {
            pos = chosen.expect("detector fires when nothing is selected");
            path.push(pos);
            continue;
        };
        if artificial.len() >= params.max_artificial {
            return finish(PlanStatus::NoPath, path, ring.evals, artificial);
        }
        let marker = Obstacle::new(event.position, params.rho_b, ObstacleKind::Artificial);
        ring.add_obstacle(&marker, params);
        artificial.push(marker);
        pos = req.start;
        path.reset_to(req.start);
        detector.clear();
    }
}
