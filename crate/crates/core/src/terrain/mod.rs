//! Lunar-analog obstacle fields from an exponential size-frequency model.
//!
//! The cumulative fractional area covered by features larger than `D` is
//! `F(D) = k exp(-q D)`; the implied cumulative number per square meter is
//! `N(D) = (4 q k / pi) (exp(-q D) / D - q E1(q D))`, the tail integral of the
//! number density `-F'(D) / (pi D^2 / 4)`. Diameters are drawn from
//! `N` truncated to `[d_min, d_max]` and then rescaled so the field hits a
//! prescribed area fraction with a prescribed feature count.

pub mod expint;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, Obstacle, ObstacleKind, Rect, Scenario, Vec2, WorldSize};

/// Rocks smaller than this diameter are not hazards for the rover.
pub const D_CRIT: f64 = 0.065;

const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;
const MAX_RESAMPLES: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbundanceModel {
    pub k_abund: f64,
    /// Decay coefficient, 1/m.
    pub q: f64,
    pub d_min: f64,
    pub d_max: f64,
}

impl AbundanceModel {
    /// Rock abundance used for every preset.
    pub fn lunar_rocks() -> Self {
        Self {
            k_abund: 0.02,
            q: 1.6,
            d_min: D_CRIT,
            d_max: 2.0,
        }
    }

    /// Crater abundance. Only the shape matters once diameters are rescaled
    /// to the target coverage; a shallow decay keeps crater sizes spread.
    pub fn lunar_craters() -> Self {
        Self {
            k_abund: 0.15,
            q: 0.1,
            d_min: 0.3,
            d_max: 4.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_abund > 0.0 && self.k_abund < 1.0) {
            return Err(Error::Domain(format!("k_abund must be in (0, 1), got {}", self.k_abund)));
        }
        if !(self.q > 0.0 && self.q.is_finite()) {
            return Err(Error::Domain(format!("q must be positive, got {}", self.q)));
        }
        if !(self.d_min > 0.0 && self.d_min < self.d_max && self.d_max.is_finite()) {
            return Err(Error::Domain("need 0 < d_min < d_max".into()));
        }
        Ok(())
    }

    /// Fraction of area covered by features with diameter at least `d`.
    pub fn cumulative_area(&self, d: f64) -> f64 {
        self.k_abund * (-self.q * d).exp()
    }

    /// Number of features per square meter with diameter at least `d`.
    pub fn cumulative_number(&self, d: f64) -> Result<f64> {
        if !(d > 0.0) {
            return Err(Error::Domain(format!("diameter must be positive, got {d}")));
        }
        Ok(self.n_unchecked(d))
    }

    fn n_unchecked(&self, d: f64) -> f64 {
        let qd = self.q * d;
        4.0 * self.q * self.k_abund / PI * ((-qd).exp() / d - self.q * expint::e1(qd))
    }

    /// CDF of diameters truncated to `[d_min, d_max]`.
    pub fn truncated_cdf(&self, d: f64) -> f64 {
        if d <= self.d_min {
            return 0.0;
        }
        if d >= self.d_max {
            return 1.0;
        }
        let lo = self.n_unchecked(self.d_min);
        let hi = self.n_unchecked(self.d_max);
        (lo - self.n_unchecked(d)) / (lo - hi)
    }

    /// Inverts [`Self::truncated_cdf`] by bisection.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        let lo_n = self.n_unchecked(self.d_min);
        let span = lo_n - self.n_unchecked(self.d_max);
        let (mut a, mut b) = (self.d_min, self.d_max);
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if (lo_n - self.n_unchecked(m)) / span < u {
                a = m;
            } else {
                b = m;
            }
            if b - a <= 1e-13 * b {
                break;
            }
        }
        0.5 * (a + b)
    }

    /// Draws `count` diameters by inverse-transform sampling.
    pub fn sample_diameters<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<f64> {
        (0..count).map(|_| self.inverse_cdf(rng.random::<f64>())).collect()
    }
}

/// Geometry of a generated scenario, i.e. a [`Scenario`] without obstacles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGeometry {
    pub world_size: WorldSize,
    pub obstacle_region: Rect,
    pub start: Vec2,
    pub goal_center: Vec2,
    pub goal_radius: f64,
    pub rover_radius: f64,
}

impl ScenarioGeometry {
    pub fn lunar_default() -> Self {
        let s = Scenario::lunar_default(0);
        Self {
            world_size: s.world_size,
            obstacle_region: s.obstacle_region,
            start: s.start,
            goal_center: s.goal_center,
            goal_radius: s.goal_radius,
            rover_radius: s.rover_radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub rock_model: AbundanceModel,
    pub crater_model: AbundanceModel,
    pub rock_count: usize,
    pub crater_count: usize,
    pub target_rock_area_fraction: f64,
    pub target_crater_area_fraction: f64,
    pub geometry: ScenarioGeometry,
}

pub const ROCK_AREA_FRACTION: f64 = 0.018;
pub const CRATER_AREA_FRACTION: f64 = 0.15;
pub const CRATER_AREA_FRACTION_LOW: f64 = 0.11;

impl ScenarioSpec {
    fn lunar(rocks: usize, craters: usize, crater_fraction: f64) -> Self {
        Self {
            rock_model: AbundanceModel::lunar_rocks(),
            crater_model: AbundanceModel::lunar_craters(),
            rock_count: rocks,
            crater_count: craters,
            target_rock_area_fraction: ROCK_AREA_FRACTION,
            target_crater_area_fraction: crater_fraction,
            geometry: ScenarioGeometry::lunar_default(),
        }
    }

    /// Presets `A`, `B`, `C` (15 % crater coverage) and `A11`, `B11`, `C11`
    /// (11 % crater coverage). Names are case-insensitive.
    pub fn preset(name: &str) -> Result<Self> {
        let upper = name.to_ascii_uppercase();
        let (base, fraction) = match upper.strip_suffix("11") {
            Some(b) => (b, CRATER_AREA_FRACTION_LOW),
            None => (upper.as_str(), CRATER_AREA_FRACTION),
        };
        let (rocks, craters) = match base {
            "A" => (42, 38),
            "B" => (88, 32),
            "C" => (137, 24),
            _ => return Err(Error::UnknownPreset(name.to_string())),
        };
        Ok(Self::lunar(rocks, craters, fraction))
    }

    pub fn validate(&self) -> Result<()> {
        self.rock_model.validate()?;
        self.crater_model.validate()?;
        if self.rock_count == 0 || self.crater_count == 0 {
            return Err(Error::Domain("obstacle counts must be positive".into()));
        }
        for f in [self.target_rock_area_fraction, self.target_crater_area_fraction] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Domain(format!("area fraction must be in (0, 1), got {f}")));
            }
        }
        if !(self.geometry.obstacle_region.area() > 0.0) {
            return Err(Error::Domain("obstacle region is empty".into()));
        }
        Ok(())
    }
}

fn disc_area(d: f64) -> f64 {
    PI * d * d / 4.0
}

/// Multiplies every diameter by the factor that makes the total disc area
/// equal `target_area`.
fn rescale(diameters: &mut [f64], target_area: f64) {
    let area: f64 = diameters.iter().map(|&d| disc_area(d)).sum();
    let s = (target_area / area).sqrt();
    for d in diameters {
        *d *= s;
    }
}

/// Total disc area of obstacles of `kind`, divided by the region area.
pub fn area_fraction(obstacles: &[Obstacle], kind: ObstacleKind, region: &Rect) -> f64 {
    obstacles
        .iter()
        .filter(|o| o.kind == kind)
        .map(|o| PI * o.radius * o.radius)
        .sum::<f64>()
        / region.area()
}

fn place<R: Rng + ?Sized>(
    radius: f64,
    kind: ObstacleKind,
    g: &ScenarioGeometry,
    rng: &mut R,
) -> Result<Obstacle> {
    let r = g.obstacle_region;
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let c = Vec2::new(
            rng.random_range(r.min.x..r.max.x),
            rng.random_range(r.min.y..r.max.y),
        );
        let blocks_start = distance(c, g.start) < radius + g.rover_radius;
        let blocks_goal = distance(c, g.goal_center) < radius + g.goal_radius;
        if !blocks_start && !blocks_goal {
            return Ok(Obstacle::new(c, radius, kind));
        }
    }
    Err(Error::Placement {
        attempts: MAX_PLACEMENT_ATTEMPTS,
    })
}

/// Generates a scenario deterministically from `seed`.
///
/// Rock diameters are redrawn as a whole until every rescaled rock exceeds
/// [`D_CRIT`], so the emitted rock count equals `rock_count` exactly.
pub fn generate_scenario(spec: &ScenarioSpec, seed: u64) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = &spec.geometry;
    let region_area = g.obstacle_region.area();

    let mut rocks = Vec::new();
    for attempt in 0.. {
        if attempt == MAX_RESAMPLES {
            return Err(Error::Domain("could not draw a rock field above the critical diameter".into()));
        }
        rocks = spec.rock_model.sample_diameters(spec.rock_count, &mut rng);
        rescale(&mut rocks, spec.target_rock_area_fraction * region_area);
        if rocks.iter().all(|&d| d > D_CRIT) {
            break;
        }
    }
    let mut craters = spec.crater_model.sample_diameters(spec.crater_count, &mut rng);
    rescale(&mut craters, spec.target_crater_area_fraction * region_area);

    let mut obstacles = Vec::with_capacity(rocks.len() + craters.len());
    for d in rocks {
        obstacles.push(place(d / 2.0, ObstacleKind::Rock, g, &mut rng)?);
    }
    for d in craters {
        obstacles.push(place(d / 2.0, ObstacleKind::Crater, g, &mut rng)?);
    }

    let scenario = Scenario {
        world_size: g.world_size,
        obstacle_region: g.obstacle_region,
        start: g.start,
        goal_center: g.goal_center,
        goal_radius: g.goal_radius,
        rover_radius: g.rover_radius,
        seed,
        obstacles,
    };
    scenario.validate()?;
    Ok(scenario)
}
