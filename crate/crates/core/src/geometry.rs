//! Shared geometric types: points, disc obstacles, scenarios and paths.
//!
//! World coordinates are continuous meters. Every obstacle is a disc, whether
//! it came from a rock, a crater, or was inserted by the RAPF planner to mark
//! a local minimum.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { x: c, y: s }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn rotated(self, phi: f64) -> Vec2 {
        let (s, c) = phi.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.4}, {:.4})", self.x, self.y)
    }
}

pub fn distance(a: Vec2, b: Vec2) -> f64 {
    (a - b).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObstacleKind {
    Rock,
    Crater,
    /// Inserted by the RAPF planner at a detected local minimum. Never produced
    /// by terrain generation and never part of the physical ground truth.
    Artificial,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub center: Vec2,
    pub radius: f64,
    pub kind: ObstacleKind,
}

impl Obstacle {
    pub fn new(center: Vec2, radius: f64, kind: ObstacleKind) -> Self {
        debug_assert!(radius > 0.0, "obstacle radius must be positive");
        Self {
            center,
            radius,
            kind,
        }
    }

    pub fn rock(x: f64, y: f64, radius: f64) -> Self {
        Self::new(Vec2::new(x, y), radius, ObstacleKind::Rock)
    }

    pub fn crater(x: f64, y: f64, radius: f64) -> Self {
        Self::new(Vec2::new(x, y), radius, ObstacleKind::Crater)
    }

    pub fn is_physical(&self) -> bool {
        self.kind != ObstacleKind::Artificial
    }
}

// Flat `{x, y, radius, kind}` on the wire.
#[derive(Serialize, Deserialize)]
struct ObstacleRecord {
    x: f64,
    y: f64,
    radius: f64,
    kind: ObstacleKind,
}

impl Serialize for Obstacle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ObstacleRecord {
            x: self.center.x,
            y: self.center.y,
            radius: self.radius,
            kind: self.kind,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Obstacle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ObstacleRecord::deserialize(d)?;
        if !(r.radius > 0.0) {
            return Err(serde::de::Error::custom("obstacle radius must be positive"));
        }
        Ok(Obstacle::new(Vec2::new(r.x, r.y), r.radius, r.kind))
    }
}

/// Signed distance from `p` to the obstacle boundary; negative inside the disc.
pub fn clearance(p: Vec2, o: &Obstacle) -> f64 {
    distance(p, o.center) - o.radius
}

/// True iff some obstacle is closer to `p` than the rover radius.
pub fn in_collision(p: Vec2, rover_radius: f64, obstacles: &[Obstacle]) -> bool {
    obstacles.iter().any(|o| clearance(p, o) < rover_radius)
}

/// Collision test restricted to physical (rock/crater) obstacles.
pub fn in_physical_collision(p: Vec2, rover_radius: f64, obstacles: &[Obstacle]) -> bool {
    obstacles
        .iter()
        .any(|o| o.is_physical() && clearance(p, o) < rover_radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Smallest rectangle containing every point, grown by `margin` on each side.
    pub fn bounding(points: impl IntoIterator<Item = Vec2>, margin: f64) -> Option<Rect> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let (mut lo, mut hi) = (first, first);
        for p in it {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        Some(Rect::new(
            lo - Vec2::new(margin, margin),
            hi + Vec2::new(margin, margin),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldSize {
    pub width: f64,
    pub height: f64,
}

impl WorldSize {
    pub fn rect(&self) -> Rect {
        Rect::new(Vec2::ZERO, Vec2::new(self.width, self.height))
    }
}

/// A bounded planar world with a start pose, a goal disc and disc obstacles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub world_size: WorldSize,
    pub obstacle_region: Rect,
    pub start: Vec2,
    pub goal_center: Vec2,
    pub goal_radius: f64,
    pub rover_radius: f64,
    pub seed: u64,
    pub obstacles: Vec<Obstacle>,
}

impl Scenario {
    /// The 30 m x 30 m benchmark geometry with no obstacles.
    pub fn lunar_default(seed: u64) -> Self {
        Self {
            world_size: WorldSize {
                width: 30.0,
                height: 30.0,
            },
            obstacle_region: Rect::new(Vec2::new(5.0, 5.0), Vec2::new(25.0, 25.0)),
            start: Vec2::new(2.0, 2.0),
            goal_center: Vec2::new(28.0, 28.0),
            goal_radius: 0.5,
            rover_radius: 0.2,
            seed,
            obstacles: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let world = self.world_size.rect();
        if !world.contains(self.start) || !world.contains(self.goal_center) {
            return Err(Error::Domain("start and goal must lie inside the world".into()));
        }
        if !(self.goal_radius > 0.0 && self.rover_radius > 0.0) {
            return Err(Error::Domain("goal and rover radii must be positive".into()));
        }
        if in_collision(self.start, self.rover_radius, &self.obstacles) {
            return Err(Error::Domain("start position is in collision".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<FsPath>) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Content hash of the canonical JSON encoding.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let text = serde_json::to_string(self).expect("scenario serializes");
        hex::encode(Sha256::digest(text.as_bytes()))[..16].to_string()
    }
}

/// Ordered waypoint list; consecutive waypoints are kept distinct.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path {
    waypoints: Vec<Vec2>,
}

impl Path {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_start(p: Vec2) -> Self {
        Self { waypoints: vec![p] }
    }

    /// Builds a path, dropping consecutive duplicates.
    pub fn from_points(points: impl IntoIterator<Item = Vec2>) -> Self {
        let mut path = Self::new();
        for p in points {
            path.push(p);
        }
        path
    }

    /// Appends `p` unless it equals the last waypoint. Returns whether it was added.
    pub fn push(&mut self, p: Vec2) -> bool {
        if self.waypoints.last() == Some(&p) {
            return false;
        }
        self.waypoints.push(p);
        true
    }

    pub fn reset_to(&mut self, p: Vec2) {
        self.waypoints.clear();
        self.waypoints.push(p);
    }

    pub fn waypoints(&self) -> &[Vec2] {
        &self.waypoints
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn first(&self) -> Option<Vec2> {
        self.waypoints.first().copied()
    }

    pub fn last(&self) -> Option<Vec2> {
        self.waypoints.last().copied()
    }

    pub fn length(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| distance(w[0], w[1]))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn distance_examples() {
        assert_eq!(distance(Vec2::new(0.0, 0.0), Vec2::new(3.0, 4.0)), 5.0);
        assert_eq!(distance(Vec2::new(1.0, 1.0), Vec2::new(1.0, 1.0)), 0.0);
        assert_eq!(distance(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)), 1.0);
    }

    #[test]
    fn clearance_examples() {
        let p = Vec2::ZERO;
        assert_eq!(clearance(p, &Obstacle::rock(3.0, 0.0, 1.0)), 2.0);
        assert_eq!(clearance(p, &Obstacle::rock(0.0, 0.0, 1.0)), -1.0);
        assert_eq!(clearance(p, &Obstacle::rock(1.0, 0.0, 1.0)), 0.0);
    }

    #[test]
    fn collision_examples() {
        let p = Vec2::ZERO;
        assert!(!in_collision(p, 0.2, &[Obstacle::rock(5.0, 5.0, 0.1)]));
        assert!(in_collision(p, 0.2, &[Obstacle::rock(0.25, 0.0, 0.1)]));
        assert!(!in_collision(p, 0.2, &[]));
    }

    #[test]
    fn path_drops_duplicates_and_measures_length() {
        let path = Path::from_points([
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 0.0),
            Vec2::new(3.0, 4.0),
            Vec2::new(3.0, 4.0),
            Vec2::new(3.0, 5.0),
        ]);
        assert_eq!(path.len(), 3);
        assert_abs_diff_eq!(path.length(), 6.0);
    }

    #[test]
    fn scenario_json_round_trip_is_lossless() {
        let mut s = Scenario::lunar_default(7);
        s.obstacles.push(Obstacle::rock(10.123456789, 11.0, 0.0731));
        s.obstacles.push(Obstacle::crater(15.0, 12.5, 0.9));
        let text = s.to_json().unwrap();
        assert!(text.contains("\"kind\": \"crater\""));
        assert!(text.contains("\"world_size\""));
        assert_eq!(Scenario::from_json(&text).unwrap(), s);
    }

    #[test]
    fn scenario_rejects_colliding_start() {
        let mut s = Scenario::lunar_default(0);
        s.obstacles.push(Obstacle::rock(2.1, 2.0, 0.2));
        assert!(s.validate().is_err());
    }

    fn arb_point() -> impl Strategy<Value = Vec2> {
        (-50.0..50.0f64, -50.0..50.0f64).prop_map(|(x, y)| Vec2::new(x, y))
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(a in arb_point(), b in arb_point(), c in arb_point()) {
            prop_assert!(distance(a, b) >= 0.0);
            prop_assert_eq!(distance(a, a), 0.0);
            prop_assert_eq!(distance(a, b), distance(b, a));
            prop_assert!(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-12);
        }

        #[test]
        fn collision_is_monotone_in_radius(
            p in arb_point(),
            centers in prop::collection::vec((arb_point(), 0.01..3.0f64), 0..8),
            r in 0.01..2.0f64,
            extra in 0.0..2.0f64,
        ) {
            let obstacles: Vec<_> = centers
                .into_iter()
                .map(|(c, rad)| Obstacle::new(c, rad, ObstacleKind::Rock))
                .collect();
            if in_collision(p, r, &obstacles) {
                prop_assert!(in_collision(p, r + extra, &obstacles));
            }
        }

        #[test]
        fn path_length_bounds_straight_line(pts in prop::collection::vec(arb_point(), 2..20)) {
            let path = Path::from_points(pts);
            let (a, b) = (path.first().unwrap(), path.last().unwrap());
            prop_assert!(path.length() + 1e-9 >= distance(a, b));
        }
    }
}
