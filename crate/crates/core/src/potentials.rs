//! Potential and force field evaluations.
//!
//! Two families live here:
//!
//! * quadratic potentials (classical APF) with their closed-form gradients and
//!   the rotated "vortex" variant used by RVF;
//! * truncated Gaussian potentials (CRBAPF*/RAPF) whose repulsive term has an
//!   infinite core, represented by [`Potential::Infinite`].
//!
//! Quadratic distances are plain Euclidean; Gaussian distances are squared
//! Euclidean, with the lower/upper radii compared against their square root.
//! In both families the distance is measured to the obstacle center and the
//! obstacle size enters only through the per-obstacle radii computed by
//! [`PlannerParams`].

use std::cmp::Ordering;
use std::f64::consts::TAU;
use std::fmt;
use std::io::Write;
use std::ops::Add;

use crate::error::{Error, Result};
use crate::geometry::{Obstacle, Rect, Vec2};
use crate::params::{PlannerParams, Spin};

/// A potential value with a distinguished infinite sentinel that orders above
/// every finite value and absorbs addition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    Finite(f64),
    Infinite,
}

impl Potential {
    pub const ZERO: Potential = Potential::Finite(0.0);

    pub fn is_finite(self) -> bool {
        matches!(self, Potential::Finite(_))
    }

    /// The value as `f64`, mapping the sentinel to `f64::INFINITY`.
    pub fn value(self) -> f64 {
        match self {
            Potential::Finite(v) => v,
            Potential::Infinite => f64::INFINITY,
        }
    }

    /// Strict "lower than" used by the bacteria criterion `J_b - J(x) < 0`.
    /// Nothing is lower than itself, including the sentinel.
    pub fn is_lower_than(self, other: Potential) -> bool {
        match (self, other) {
            (Potential::Finite(a), Potential::Finite(b)) => a - b < 0.0,
            (Potential::Finite(_), Potential::Infinite) => true,
            (Potential::Infinite, _) => false,
        }
    }
}

impl Add for Potential {
    type Output = Potential;
    fn add(self, rhs: Potential) -> Potential {
        match (self, rhs) {
            (Potential::Finite(a), Potential::Finite(b)) => Potential::Finite(a + b),
            _ => Potential::Infinite,
        }
    }
}

impl PartialOrd for Potential {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Potential::Finite(a), Potential::Finite(b)) => a.partial_cmp(b),
            (Potential::Finite(_), Potential::Infinite) => Some(Ordering::Less),
            (Potential::Infinite, Potential::Finite(_)) => Some(Ordering::Greater),
            (Potential::Infinite, Potential::Infinite) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Finite(v) => write!(f, "{v}"),
            Potential::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSample {
    pub value: Potential,
    pub position: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceSample {
    pub fx: f64,
    pub fy: f64,
    pub position: Vec2,
}

impl ForceSample {
    pub fn new(force: Vec2, position: Vec2) -> Self {
        Self {
            fx: force.x,
            fy: force.y,
            position,
        }
    }

    pub fn vector(&self) -> Vec2 {
        Vec2::new(self.fx, self.fy)
    }

    pub fn magnitude(&self) -> f64 {
        self.vector().norm()
    }
}

// ---------------------------------------------------------------------------
// Quadratic family

pub fn quad_attractive(p: Vec2, target: Vec2, params: &PlannerParams) -> f64 {
    0.5 * params.k_a * (p - target).norm_squared()
}

fn quad_obstacle_term(p: Vec2, o: &Obstacle, params: &PlannerParams) -> Result<f64> {
    let rho0 = params.quad_influence(o);
    let d = (p - o.center).norm();
    if d > rho0 {
        return Ok(0.0);
    }
    if d == 0.0 {
        return Err(Error::Singular(p));
    }
    let bracket = 1.0 / d - 1.0 / rho0;
    Ok(0.5 * params.k_rep * bracket * bracket)
}

pub fn quad_repulsive(p: Vec2, obstacles: &[Obstacle], params: &PlannerParams) -> Result<f64> {
    obstacles
        .iter()
        .try_fold(0.0, |acc, o| Ok(acc + quad_obstacle_term(p, o, params)?))
}

pub fn quad_total(
    p: Vec2,
    target: Vec2,
    obstacles: &[Obstacle],
    params: &PlannerParams,
) -> Result<f64> {
    Ok(quad_attractive(p, target, params) + quad_repulsive(p, obstacles, params)?)
}

/// Gradient (not force) of one obstacle's quadratic potential, or `None`
/// outside its influence distance.
pub fn quad_obstacle_gradient(
    p: Vec2,
    o: &Obstacle,
    params: &PlannerParams,
) -> Result<Option<Vec2>> {
    let rho0 = params.quad_influence(o);
    let delta = p - o.center;
    let d = delta.norm();
    if d > rho0 {
        return Ok(None);
    }
    if d == 0.0 {
        return Err(Error::Singular(p));
    }
    // d/dd [k/2 (1/d - 1/rho0)^2] = -k (1/d - 1/rho0) / d^2, along delta / d.
    let scale = -params.k_rep * (1.0 / d - 1.0 / rho0) / (d * d * d);
    Ok(Some(delta * scale))
}

/// The force `-grad J(p)` of the quadratic field, in closed form.
pub fn quad_gradient(
    p: Vec2,
    target: Vec2,
    obstacles: &[Obstacle],
    params: &PlannerParams,
) -> Result<ForceSample> {
    let mut force = (target - p) * params.k_a;
    for o in obstacles {
        if let Some(g) = quad_obstacle_gradient(p, o, params)? {
            force = force - g;
        }
    }
    Ok(ForceSample::new(force, p))
}

/// Rotates an obstacle's potential gradient by 90 degrees: `(dJ/dy, -dJ/dx)`
/// for counter-clockwise circulation, the opposite for clockwise.
pub fn rotate_contribution(gradient: Vec2, spin: Spin) -> Vec2 {
    Vec2::new(gradient.y, -gradient.x) * spin.sign()
}

/// RVF force: the attractive force plus, for every obstacle within its
/// influence distance, the rotated obstacle gradient. Obstacles out of range
/// contribute nothing, exactly as in the unrotated field.
pub fn vortex_force(
    p: Vec2,
    target: Vec2,
    obstacles: &[Obstacle],
    params: &PlannerParams,
    spin: Spin,
) -> Result<ForceSample> {
    let mut force = (target - p) * params.k_a;
    for o in obstacles {
        if let Some(g) = quad_obstacle_gradient(p, o, params)? {
            force += rotate_contribution(g, spin);
        }
    }
    Ok(ForceSample::new(force, p))
}

// ---------------------------------------------------------------------------
// Gaussian family

/// `-alpha_a * exp(-mu_a * d^2)` with `d` the Euclidean distance to the target.
pub fn gauss_attractive(p: Vec2, target: Vec2, params: &PlannerParams) -> f64 {
    -params.alpha_a * (-params.mu_a * (p - target).norm_squared()).exp()
}

/// One repulsive Gaussian source, precomputed from an obstacle.
#[derive(Debug, Clone, Copy)]
struct GaussSource {
    center: Vec2,
    lower: f64,
    upper: f64,
    // Slightly inflated upper^2 for a cheap, never-wrong early reject.
    reject_sq: f64,
}

impl GaussSource {
    fn new(o: &Obstacle, params: &PlannerParams) -> Self {
        let (lower, upper) = params.gauss_radii(o);
        Self {
            center: o.center,
            lower,
            upper,
            reject_sq: upper * upper * (1.0 + 1e-9) + 1e-12,
        }
    }

    #[inline]
    fn term(&self, p: Vec2, alpha: f64, mu: f64) -> Potential {
        let sq = (p - self.center).norm_squared();
        if sq > self.reject_sq {
            return Potential::ZERO;
        }
        let r = sq.sqrt();
        if r > self.upper {
            Potential::ZERO
        } else if self.lower > 0.0 && r <= self.lower {
            Potential::Infinite
        } else {
            Potential::Finite(alpha * (-mu * sq).exp())
        }
    }
}

pub fn gauss_repulsive(p: Vec2, obstacles: &[Obstacle], params: &PlannerParams) -> Potential {
    let mut total = Potential::ZERO;
    for o in obstacles {
        total = total + GaussSource::new(o, params).term(p, params.alpha_o, params.mu_o);
        if total == Potential::Infinite {
            break;
        }
    }
    total
}

pub fn gauss_total(
    p: Vec2,
    target: Vec2,
    obstacles: &[Obstacle],
    params: &PlannerParams,
) -> Potential {
    // Summed attractive-first so that it agrees bit-for-bit with GaussianField.
    let mut total = Potential::Finite(gauss_attractive(p, target, params));
    for o in obstacles {
        total = total + GaussSource::new(o, params).term(p, params.alpha_o, params.mu_o);
        if total == Potential::Infinite {
            break;
        }
    }
    total
}

/// Precomputed Gaussian field for repeated evaluation against a fixed target.
///
/// Evaluations restricted to a neighbourhood (see [`GaussianField::gather_near`])
/// return exactly the same value as a full evaluation, because sources farther
/// than their upper radius contribute an exact zero.
#[derive(Debug, Clone)]
pub struct GaussianField {
    target: Vec2,
    alpha_a: f64,
    mu_a: f64,
    alpha_o: f64,
    mu_o: f64,
    sources: Vec<GaussSource>,
}

impl GaussianField {
    pub fn new(target: Vec2, obstacles: &[Obstacle], params: &PlannerParams) -> Self {
        Self {
            target,
            alpha_a: params.alpha_a,
            mu_a: params.mu_a,
            alpha_o: params.alpha_o,
            mu_o: params.mu_o,
            sources: obstacles.iter().map(|o| GaussSource::new(o, params)).collect(),
        }
    }

    pub fn push(&mut self, o: &Obstacle, params: &PlannerParams) {
        self.sources.push(GaussSource::new(o, params));
    }

    fn attractive(&self, p: Vec2) -> Potential {
        Potential::Finite(-self.alpha_a * (-self.mu_a * (p - self.target).norm_squared()).exp())
    }

    pub fn eval(&self, p: Vec2) -> Potential {
        let mut total = self.attractive(p);
        for s in &self.sources {
            total = total + s.term(p, self.alpha_o, self.mu_o);
            if total == Potential::Infinite {
                break;
            }
        }
        total
    }

    /// Indices of sources that can be nonzero anywhere within `reach` of `p`.
    pub fn gather_near(&self, p: Vec2, reach: f64, out: &mut Vec<usize>) {
        out.clear();
        for (i, s) in self.sources.iter().enumerate() {
            let r = s.upper + reach;
            if (p - s.center).norm_squared() <= r * r * (1.0 + 1e-9) + 1e-12 {
                out.push(i);
            }
        }
    }

    pub fn eval_subset(&self, p: Vec2, subset: &[usize]) -> Potential {
        let mut total = self.attractive(p);
        for &i in subset {
            total = total + self.sources[i].term(p, self.alpha_o, self.mu_o);
            if total == Potential::Infinite {
                break;
            }
        }
        total
    }
}

// ---------------------------------------------------------------------------
// Bacteria ring

/// `N_B` points on the circle of radius `rho_b` about `p`, at angles
/// `2*pi*n/N_B`, `n = 1..N_B`. With `align_to`, the ring is rotated so that
/// the last point lies exactly on the ray from `p` toward `align_to`.
pub fn bacteria_points(
    p: Vec2,
    params: &PlannerParams,
    align_to: Option<Vec2>,
) -> Result<Vec<Vec2>> {
    let mut out = Vec::with_capacity(params.n_bacteria);
    bacteria_points_into(p, &ring_directions(params.n_bacteria), params.rho_b, align_to, &mut out)?;
    Ok(out)
}

/// Unit directions at angles `2*pi*n/N_B`, `n = 1..N_B`; the last one is +x.
pub(crate) fn ring_directions(n_bacteria: usize) -> Vec<Vec2> {
    (1..=n_bacteria)
        .map(|n| match n % n_bacteria {
            0 => Vec2::new(1.0, 0.0),
            k => Vec2::from_angle(TAU * k as f64 / n_bacteria as f64),
        })
        .collect()
}

/// Ring points from precomputed [`ring_directions`], rotated so that +x maps
/// onto the direction toward `align_to` when given.
pub(crate) fn bacteria_points_into(
    p: Vec2,
    directions: &[Vec2],
    rho_b: f64,
    align_to: Option<Vec2>,
    out: &mut Vec<Vec2>,
) -> Result<()> {
    out.clear();
    match align_to {
        None => out.extend(directions.iter().map(|&d| p + d * rho_b)),
        Some(t) => {
            let b = (t - p).normalized().ok_or(Error::DegenerateDirection)?;
            out.extend(
                directions
                    .iter()
                    .map(|d| p + Vec2::new(b.x * d.x - b.y * d.y, b.x * d.y + b.y * d.x) * rho_b),
            );
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Visualization export

/// Dense grid of Gaussian total potential over a rectangle, cell centers
/// sampled row-major (rows along +y, columns along +x).
#[derive(Debug, Clone)]
pub struct PotentialMap {
    pub xmin: f64,
    pub ymin: f64,
    pub cell_size: f64,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<Potential>,
}

impl PotentialMap {
    pub fn compute(
        bounds: Rect,
        cell_size: f64,
        target: Vec2,
        obstacles: &[Obstacle],
        params: &PlannerParams,
    ) -> Result<Self> {
        if !(cell_size > 0.0) {
            return Err(Error::Domain("cell size must be positive".into()));
        }
        let cols = (bounds.width() / cell_size).ceil().max(1.0) as usize;
        let rows = (bounds.height() / cell_size).ceil().max(1.0) as usize;
        let field = GaussianField::new(target, obstacles, params);
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let y = bounds.min.y + (r as f64 + 0.5) * cell_size;
            for c in 0..cols {
                let x = bounds.min.x + (c as f64 + 0.5) * cell_size;
                values.push(field.eval(Vec2::new(x, y)));
            }
        }
        Ok(Self {
            xmin: bounds.min.x,
            ymin: bounds.min.y,
            cell_size,
            rows,
            cols,
            values,
        })
    }

    pub fn get(&self, row: usize, col: usize) -> Potential {
        self.values[row * self.cols + col]
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "# {} {} {} {} {}",
            self.xmin, self.ymin, self.cell_size, self.rows, self.cols
        )?;
        for row in self.values.chunks(self.cols) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}
