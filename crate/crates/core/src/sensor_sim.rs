//! Closed-loop navigation trials with a range and field-of-view limited sensor.
//!
//! Each step the rover turns toward its next plan position, looks, replans
//! from its current pose if anything new came into view, and then moves one
//! `step_size` along the plan. Detection is noiseless unless a noise hook is
//! installed.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, in_physical_collision, Obstacle, Path, Scenario, Vec2};
use crate::params::PlannerParams;
use crate::planners::{plan, PlanRequest, PlanStatus, PlannerKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    /// Meters.
    pub range: f64,
    /// Full opening angle, radians.
    pub fov: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            range: 0.8,
            fov: 62f64.to_radians(),
        }
    }
}

impl SensorModel {
    pub fn new(range: f64, fov: f64) -> Result<Self> {
        if !(range > 0.0) || !(fov > 0.0 && fov <= TAU) {
            return Err(Error::Domain(format!("invalid sensor: range {range}, fov {fov}")));
        }
        Ok(Self { range, fov })
    }

    /// True when the obstacle disc intersects the sensing sector at `pos`
    /// facing `heading`.
    pub fn sees(&self, pos: Vec2, heading: f64, o: &Obstacle) -> bool {
        let to_center = o.center - pos;
        let d = to_center.norm();
        if d - o.radius > self.range {
            return false;
        }
        if d <= o.radius || self.fov >= TAU {
            return true;
        }
        let half = self.fov / 2.0;
        if wrap_angle(to_center.angle() - heading).abs() <= half {
            return true;
        }
        // Center outside the sector: the disc can still cross a boundary ray.
        [heading - half, heading + half].into_iter().any(|a| {
            let dir = Vec2::from_angle(a);
            let t = to_center.dot(dir).clamp(0.0, self.range);
            distance(pos + dir * t, o.center) <= o.radius
        })
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    w
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoverState {
    pub position: Vec2,
    /// Radians in `(-pi, pi]`.
    pub heading: f64,
    pub known_obstacles: Vec<Obstacle>,
    pub walked: Path,
}

/// Ground-truth obstacles visible from `state`, in truth order.
pub fn detect(state: &RoverState, truth: &[Obstacle], sensor: &SensorModel) -> Vec<Obstacle> {
    truth
        .iter()
        .filter(|o| sensor.sees(state.position, state.heading, o))
        .copied()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Reached,
    Collision,
    Timeout,
    NoPath,
}

impl TrialStatus {
    pub fn name(self) -> &'static str {
        match self {
            TrialStatus::Reached => "reached",
            TrialStatus::Collision => "collision",
            TrialStatus::Timeout => "timeout",
            TrialStatus::NoPath => "nopath",
        }
    }
}

/// Smallest center distance between the walked path and one detected obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetySample {
    /// Index into the scenario obstacle list.
    pub obstacle: usize,
    pub min_distance: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub replan: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub status: TrialStatus,
    /// Sum of planner wall times, seconds.
    pub planning_time_total: f64,
    /// Wall time of each planner call, seconds.
    pub replan_times: Vec<f64>,
    pub walked_length: f64,
    pub safety_samples: Vec<SafetySample>,
    pub potential_evals: u64,
    pub replan_count: usize,
    pub steps: usize,
    pub artificial_count: usize,
    pub walked: Path,
    /// Populated only when [`TrialConfig::record_trace`] is set.
    pub trace: Vec<TraceRecord>,
    /// Last plan the rover was following.
    pub last_plan: Path,
}

/// Optional perturbation applied to each detection before it is stored.
pub type DetectionNoise = fn(&Obstacle, &mut ChaCha8Rng) -> Obstacle;

#[derive(Debug, Clone, Copy)]
pub struct TrialConfig {
    pub sensor: SensorModel,
    /// Hands the full obstacle list to the planner up front.
    pub omniscient: bool,
    /// Maximum number of rover moves.
    pub walk_budget: usize,
    pub record_trace: bool,
    pub noise: Option<DetectionNoise>,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            sensor: SensorModel::default(),
            omniscient: false,
            walk_budget: 10_000,
            record_trace: false,
            noise: None,
        }
    }
}

/// Position along a plan polyline.
struct Follower {
    points: Vec<Vec2>,
    seg: usize,
}

impl Follower {
    fn new(path: &Path) -> Self {
        Self {
            points: path.waypoints().to_vec(),
            seg: 0,
        }
    }

    /// The first plan point ahead of `pos` at Euclidean distance `step`, or
    /// the plan end if it is closer than that. `pos` must lie on the plan.
    fn peek(&self, pos: Vec2, step: f64) -> (Vec2, usize) {
        for i in self.seg..self.points.len().saturating_sub(1) {
            let (a, b) = (self.points[i], self.points[i + 1]);
            if distance(b, pos) < step {
                continue;
            }
            if i == self.seg {
                let dir = (b - pos).normalized().expect("b is at least one step away");
                return (pos + dir * step, i);
            }
            // |a + t (b - a) - pos| = step with |a - pos| < step <= |b - pos|
            let ab = b - a;
            let ap = a - pos;
            let qa = ab.norm_squared();
            let qb = 2.0 * ab.dot(ap);
            let qc = ap.norm_squared() - step * step;
            let t = ((-qb + (qb * qb - 4.0 * qa * qc).max(0.0).sqrt()) / (2.0 * qa)).clamp(0.0, 1.0);
            return (a + ab * t, i);
        }
        (*self.points.last().expect("plans are never empty"), self.points.len().saturating_sub(1))
    }
}

fn plan_seed(seed: u64, replan: usize) -> u64 {
    seed ^ (replan as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs one sense-plan-move trial. Deterministic in everything but the
/// recorded wall times.
pub fn run_trial(
    scenario: &Scenario,
    planner: PlannerKind,
    params: &PlannerParams,
    config: &TrialConfig,
    seed: u64,
) -> Result<TrialOutcome> {
    scenario.validate()?;
    let mut params = params.clone();
    params.rover_radius = scenario.rover_radius;
    params.validate()?;

    let truth = &scenario.obstacles;
    let world = scenario.world_size.rect();
    let goal = scenario.goal_center;
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);

    let mut pos = scenario.start;
    let mut heading = wrap_angle((goal - pos).angle());
    let mut walked = Path::from_start(pos);
    let mut known: Vec<Obstacle> = Vec::new();
    let mut seen = vec![false; truth.len()];
    let mut min_dist: Vec<f64> = truth.iter().map(|o| distance(pos, o.center)).collect();
    let mut follower: Option<Follower> = None;
    let mut last_plan = Path::new();

    let mut replan_times = Vec::new();
    let mut evals = 0u64;
    let mut artificial = 0usize;
    let mut trace = Vec::new();
    let mut steps = 0usize;

    if config.omniscient {
        known.extend(truth.iter().copied());
        seen.fill(true);
    }

    let status = 'trial: loop {
        if distance(pos, goal) < scenario.goal_radius {
            break TrialStatus::Reached;
        }
        if steps >= config.walk_budget {
            break TrialStatus::Timeout;
        }

        // Look along the intended motion; replan while something new shows up.
        let mut replanned = false;
        let mut next = pos;
        for _ in 0..8 {
            let mut fresh = false;
            if !config.omniscient {
                for (i, o) in truth.iter().enumerate() {
                    if !seen[i] && config.sensor.sees(pos, heading, o) {
                        seen[i] = true;
                        fresh = true;
                        known.push(match config.noise {
                            Some(f) => f(o, &mut noise_rng),
                            None => *o,
                        });
                    }
                }
            }
            if fresh || follower.is_none() {
                let req = PlanRequest {
                    start: pos,
                    target: goal,
                    known_obstacles: known.clone(),
                    params: params.clone(),
                    rng_seed: plan_seed(seed, replan_times.len()),
                    bounds: Some(world),
                };
                let result = plan(planner, &req)?;
                replan_times.push(result.wall_time);
                evals += result.potential_evals;
                replanned = true;
                artificial += result.artificial_obstacles.len();
                known.extend(result.artificial_obstacles.iter().copied());
                match result.status {
                    PlanStatus::NoPath => break 'trial TrialStatus::NoPath,
                    PlanStatus::Timeout => break 'trial TrialStatus::Timeout,
                    PlanStatus::Reached => {}
                }
                follower = Some(Follower::new(&result.path));
                last_plan = result.path;
            }
            let f = follower.as_ref().expect("a plan exists after replanning");
            let (candidate, _) = f.peek(pos, params.step_size);
            next = candidate;
            let Some(dir) = (next - pos).normalized() else {
                break;
            };
            let want = wrap_angle(dir.angle());
            let turned = wrap_angle(want - heading).abs() > 1e-12;
            heading = want;
            if !fresh && !turned {
                break;
            }
        }

        if next == pos {
            // The plan ends here but the goal disc is not reached.
            break TrialStatus::NoPath;
        }
        let f = follower.as_mut().expect("a plan exists");
        let (moved, seg) = f.peek(pos, params.step_size);
        f.seg = seg;
        pos = moved;
        walked.push(pos);
        steps += 1;
        for (m, o) in min_dist.iter_mut().zip(truth) {
            *m = m.min(distance(pos, o.center));
        }
        if config.record_trace {
            if trace.is_empty() {
                trace.push(TraceRecord {
                    step: 0,
                    x: scenario.start.x,
                    y: scenario.start.y,
                    heading,
                    replan: false,
                });
            }
            trace.push(TraceRecord {
                step: steps,
                x: pos.x,
                y: pos.y,
                heading,
                replan: replanned,
            });
        }
        if in_physical_collision(pos, scenario.rover_radius, truth) {
            break TrialStatus::Collision;
        }
    };

    let safety_samples = truth
        .iter()
        .enumerate()
        .filter(|(i, o)| seen[*i] && o.is_physical())
        .map(|(i, o)| SafetySample {
            obstacle: i,
            min_distance: min_dist[i],
            radius: o.radius,
        })
        .collect();

    Ok(TrialOutcome {
        status,
        planning_time_total: replan_times.iter().sum(),
        replan_count: replan_times.len(),
        replan_times,
        walked_length: walked.length(),
        safety_samples,
        potential_evals: evals,
        steps,
        artificial_count: artificial,
        walked,
        trace,
        last_plan,
    })
}

/// Writes `step,x,y,heading,replan` rows.
pub fn write_trace_csv<W: Write>(trace: &[TraceRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "step,x,y,heading,replan")?;
    for r in trace {
        writeln!(w, "{},{},{},{},{}", r.step, r.x, r.y, r.heading, u8::from(r.replan))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Obstacle, ObstacleKind};
    use approx::assert_abs_diff_eq;

    fn state_at(heading_deg: f64) -> RoverState {
        RoverState {
            position: Vec2::ZERO,
            heading: heading_deg.to_radians(),
            known_obstacles: vec![],
            walked: Path::from_start(Vec2::ZERO),
        }
    }

    #[test]
    fn detection_examples() {
        let s = SensorModel::default();
        let ahead = |d: f64| Obstacle::rock(d, 0.0, 0.05);
        assert_eq!(detect(&state_at(0.0), &[ahead(0.5)], &s).len(), 1);
        assert!(detect(&state_at(0.0), &[ahead(1.0)], &s).is_empty());
        let off = Obstacle::rock(0.5 * 40f64.to_radians().cos(), 0.5 * 40f64.to_radians().sin(), 0.05);
        assert!(detect(&state_at(0.0), &[off], &s).is_empty());
    }

    #[test]
    fn large_disc_is_seen_by_its_edge() {
        let s = SensorModel::default();
        // center 1.5 m ahead, edge 0.5 m ahead
        assert!(s.sees(Vec2::ZERO, 0.0, &Obstacle::crater(1.5, 0.0, 1.0)));
        // center at 60 degrees, but the disc crosses the +31 degree ray
        let c = Vec2::from_angle(60f64.to_radians()) * 0.7;
        assert!(s.sees(Vec2::ZERO, 0.0, &Obstacle::crater(c.x, c.y, 0.4)));
        assert!(!s.sees(Vec2::ZERO, 0.0, &Obstacle::crater(c.x, c.y, 0.1)));
    }

    #[test]
    fn wrap_angle_range() {
        assert_abs_diff_eq!(wrap_angle(3.0 * PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(-PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(0.5), 0.5);
    }

    fn open_world() -> Scenario {
        Scenario::lunar_default(0)
    }

    #[test]
    fn obstacle_free_trial_walks_straight() {
        for kind in PlannerKind::ALL {
            let out = run_trial(&open_world(), kind, &PlannerParams::default(), &TrialConfig::default(), 1).unwrap();
            assert_eq!(out.status, TrialStatus::Reached, "{kind}");
            let straight = distance(open_world().start, open_world().goal_center);
            assert!(out.walked_length <= 1.02 * straight, "{kind}: {}", out.walked_length);
            assert_eq!(out.replan_count, 1, "{kind}");
        }
    }

    #[test]
    fn unseen_obstacle_never_triggers_replan() {
        let mut s = open_world();
        s.obstacles.push(Obstacle::rock(20.0, 10.0, 0.3));
        let out = run_trial(&s, PlannerKind::Rapf, &PlannerParams::default(), &TrialConfig::default(), 1).unwrap();
        assert_eq!(out.status, TrialStatus::Reached);
        assert_eq!(out.replan_count, 1);
        assert!(out.safety_samples.is_empty());
    }

    #[test]
    fn single_rock_on_route_is_avoided() {
        let mut s = open_world();
        s.obstacles.push(Obstacle::rock(15.0, 15.0, 0.3));
        let cfg = TrialConfig { record_trace: true, ..TrialConfig::default() };
        let out = run_trial(&s, PlannerKind::Rapf, &PlannerParams::default(), &cfg, 1).unwrap();
        assert_eq!(out.status, TrialStatus::Reached);
        assert!(out.replan_count >= 2);
        let sample = out.safety_samples[0];
        assert!(sample.min_distance - sample.radius > s.rover_radius);
        // no teleportation
        let w = out.walked.waypoints();
        for (i, pair) in w.windows(2).enumerate() {
            let step = distance(pair[0], pair[1]);
            if i + 2 < w.len() {
                assert_abs_diff_eq!(step, 0.05, epsilon = 1e-9);
            } else {
                assert!(step <= 0.05 + 1e-9);
            }
        }
        // trace agrees with the walked path
        assert_eq!(out.trace.len(), w.len());
        let last = out.trace.last().unwrap();
        assert!(distance(Vec2::new(last.x, last.y), s.goal_center) < s.goal_radius);
        // safety samples match a batch recomputation over the walked path
        let batch = w.iter().map(|p| distance(*p, s.obstacles[0].center)).fold(f64::INFINITY, f64::min);
        assert_eq!(batch, sample.min_distance);
    }

    #[test]
    fn trials_are_reproducible() {
        let spec = crate::terrain::ScenarioSpec::preset("B").unwrap();
        let s = crate::terrain::generate_scenario(&spec, 4).unwrap();
        for kind in [PlannerKind::Crbapf, PlannerKind::Rapf] {
            let a = run_trial(&s, kind, &PlannerParams::default(), &TrialConfig::default(), 4).unwrap();
            let b = run_trial(&s, kind, &PlannerParams::default(), &TrialConfig::default(), 4).unwrap();
            assert_eq!(a.status, b.status);
            assert_eq!(a.walked, b.walked);
            assert_eq!(a.potential_evals, b.potential_evals);
        }
    }

    #[test]
    fn known_set_only_grows_with_detections_and_markers() {
        let spec = crate::terrain::ScenarioSpec::preset("C").unwrap();
        let s = crate::terrain::generate_scenario(&spec, 2).unwrap();
        let out = run_trial(&s, PlannerKind::Rapf, &PlannerParams::default(), &TrialConfig::default(), 2).unwrap();
        for sample in &out.safety_samples {
            assert!(s.obstacles[sample.obstacle].kind != ObstacleKind::Artificial);
        }
        if out.status != TrialStatus::Collision {
            for p in out.walked.waypoints() {
                assert!(!in_physical_collision(*p, s.rover_radius, &s.obstacles));
            }
        }
    }
}
