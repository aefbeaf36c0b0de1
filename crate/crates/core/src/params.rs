use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Obstacle, ObstacleKind};

/// Rotation sense of the RVF vortex field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    #[default]
    Ccw,
    Cw,
}

impl Spin {
    pub fn sign(self) -> f64 {
        match self {
            Spin::Ccw => 1.0,
            Spin::Cw => -1.0,
        }
    }

    pub fn flipped(self) -> Spin {
        match self {
            Spin::Ccw => Spin::Cw,
            Spin::Cw => Spin::Ccw,
        }
    }
}

/// Every tunable of the planners.
///
/// Radii that depend on obstacle size are expressed as margins beyond the
/// contact radius (`obstacle.radius + rover_radius`):
///
/// * quadratic influence distance: `contact + rho_0`
/// * Gaussian lower radius: `contact + rho_l`
/// * Gaussian upper radius: `contact + rho_l + rho_u`
///
/// Unknown fields are rejected and missing fields take their defaults, so a
/// parameter file only needs to list the overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerParams {
    /// Quadratic attractive gain.
    pub k_a: f64,
    /// Quadratic repulsive gain.
    pub k_rep: f64,
    /// Quadratic influence margin beyond contact, meters.
    pub rho_0: f64,
    /// Gaussian attractive height.
    pub alpha_a: f64,
    /// Gaussian attractive width (per squared meter).
    pub mu_a: f64,
    /// Gaussian repulsive height.
    pub alpha_o: f64,
    /// Gaussian repulsive width (per squared meter).
    pub mu_o: f64,
    /// Infinite-core margin beyond contact, meters.
    pub rho_l: f64,
    /// Width of the finite repulsive ring beyond the infinite core, meters.
    pub rho_u: f64,
    pub n_bacteria: usize,
    /// Radius of the bacteria ring, meters.
    pub rho_b: f64,
    /// Fixed step of the gradient-following planners, meters.
    pub step_size: f64,
    /// Wall-clock budget of one planner call, seconds.
    pub max_time: f64,
    pub goal_margin: f64,
    /// Random-walk length of CRBAPF* after a local minimum.
    pub rw_steps: usize,
    /// RAPF gives up with `NoPath` beyond this many artificial obstacles.
    pub max_artificial: usize,
    pub rover_radius: f64,
    pub spin: Spin,
    /// Deterministic iteration budget of one planner call (counts restarts).
    pub max_plan_steps: usize,
    /// A* grid resolution, meters.
    pub astar_cell: f64,
    /// Extra inflation of A* blocked cells beyond contact, meters.
    pub astar_margin: f64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            k_a: 1.0,
            k_rep: 3000.0,
            rho_0: 0.3,
            alpha_a: 1000.0,
            mu_a: 0.0005,
            alpha_o: 50.0,
            mu_o: 2.0,
            rho_l: 0.02,
            rho_u: 0.8,
            n_bacteria: 8,
            rho_b: 0.05,
            step_size: 0.05,
            max_time: 10.0,
            goal_margin: 0.25,
            rw_steps: 200,
            max_artificial: 50,
            rover_radius: 0.2,
            spin: Spin::Ccw,
            max_plan_steps: 40_000,
            astar_cell: 0.1,
            astar_margin: 0.05,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("k_a", self.k_a),
            ("k_rep", self.k_rep),
            ("rho_0", self.rho_0),
            ("alpha_a", self.alpha_a),
            ("mu_a", self.mu_a),
            ("alpha_o", self.alpha_o),
            ("mu_o", self.mu_o),
            ("rho_l", self.rho_l),
            ("rho_u", self.rho_u),
            ("rho_b", self.rho_b),
            ("step_size", self.step_size),
            ("goal_margin", self.goal_margin),
            ("rover_radius", self.rover_radius),
            ("astar_cell", self.astar_cell),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.max_time >= 0.0) {
            return Err(Error::InvalidParams("max_time must be nonnegative".into()));
        }
        if !(self.astar_margin >= 0.0) {
            return Err(Error::InvalidParams("astar_margin must be nonnegative".into()));
        }
        if self.rho_l >= self.rho_u {
            return Err(Error::InvalidParams("rho_l must be smaller than rho_u".into()));
        }
        if self.n_bacteria < 3 {
            return Err(Error::InvalidParams("n_bacteria must be at least 3".into()));
        }
        if self.rw_steps == 0 || self.max_artificial == 0 || self.max_plan_steps == 0 {
            return Err(Error::InvalidParams(
                "rw_steps, max_artificial and max_plan_steps must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Reads a JSON override file on top of the defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let p: PlannerParams = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn contact_radius(&self, o: &Obstacle) -> f64 {
        o.radius + self.rover_radius
    }

    /// Center distance within which `o` exerts quadratic repulsion.
    pub fn quad_influence(&self, o: &Obstacle) -> f64 {
        self.contact_radius(o) + self.rho_0
    }

    /// `(lower, upper)` Gaussian radii of `o`. Artificial obstacles have no
    /// infinite core: they mark regions to avoid, not physical hazards.
    pub fn gauss_radii(&self, o: &Obstacle) -> (f64, f64) {
        let lower = self.contact_radius(o) + self.rho_l;
        let upper = lower + self.rho_u;
        match o.kind {
            ObstacleKind::Artificial => (0.0, upper),
            _ => (lower, upper),
        }
    }

    /// Largest center distance at which any obstacle of radius `r` can affect
    /// either potential family.
    pub fn max_reach(&self, o: &Obstacle) -> f64 {
        self.gauss_radii(o).1.max(self.quad_influence(o))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        PlannerParams::default().validate().unwrap();
    }

    #[test]
    fn partial_override_file_keeps_defaults() {
        let p = PlannerParams::from_json(r#"{"n_bacteria": 12, "spin": "cw"}"#).unwrap();
        assert_eq!(p.n_bacteria, 12);
        assert_eq!(p.spin, Spin::Cw);
        assert_eq!(p.rho_b, PlannerParams::default().rho_b);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(PlannerParams::from_json(r#"{"n_bacteria": 2}"#).is_err());
        assert!(PlannerParams::from_json(r#"{"rho_l": 1.0, "rho_u": 0.5}"#).is_err());
        assert!(PlannerParams::from_json(r#"{"k_a": -1.0}"#).is_err());
        assert!(PlannerParams::from_json(r#"{"bogus": 1.0}"#).is_err());
    }

    #[test]
    fn artificial_obstacles_have_no_infinite_core() {
        let p = PlannerParams::default();
        let rock = Obstacle::rock(0.0, 0.0, 0.05);
        let mark = Obstacle::new(rock.center, 0.05, ObstacleKind::Artificial);
        let (lo, hi) = p.gauss_radii(&rock);
        assert!((lo - 0.27).abs() < 1e-12 && (hi - 1.07).abs() < 1e-12);
        assert_eq!(p.gauss_radii(&mark), (0.0, hi));
    }
}
