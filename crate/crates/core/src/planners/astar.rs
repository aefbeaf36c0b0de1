//! 8-connected grid A* with an octile heuristic and no corner cutting.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use crate::geometry::{distance, Obstacle, Path, Rect, Vec2};

use super::{PlanRequest, PlanResult, PlanStatus, DEFAULT_GRID_MARGIN};

pub type Cell = (usize, usize);

/// Occupancy grid; cell `(col, row)` covers
/// `[origin.x + col*size, origin.x + (col+1)*size) x [...]`.
#[derive(Debug, Clone)]
pub struct Grid {
    pub origin: Vec2,
    pub cell_size: f64,
    pub cols: usize,
    pub rows: usize,
    blocked: Vec<bool>,
}

impl Grid {
    pub fn new(bounds: Rect, cell_size: f64) -> Self {
        let cols = (bounds.width() / cell_size).ceil().max(1.0) as usize;
        let rows = (bounds.height() / cell_size).ceil().max(1.0) as usize;
        Self {
            origin: bounds.min,
            cell_size,
            cols,
            rows,
            blocked: vec![false; cols * rows],
        }
    }

    /// Grid from an explicit row-major occupancy mask.
    pub fn from_mask(cols: usize, rows: usize, cell_size: f64, blocked: Vec<bool>) -> Self {
        assert_eq!(blocked.len(), cols * rows, "mask size mismatch");
        Self {
            origin: Vec2::ZERO,
            cell_size,
            cols,
            rows,
            blocked,
        }
    }

    /// Blocks every cell whose center is closer than
    /// `radius + rover_radius + margin` to a physical obstacle center.
    pub fn block_obstacles(&mut self, obstacles: &[Obstacle], rover_radius: f64, margin: f64) {
        for o in obstacles.iter().filter(|o| o.is_physical()) {
            let reach = o.radius + rover_radius + margin;
            let lo_c = ((o.center.x - reach - self.origin.x) / self.cell_size).floor().max(0.0) as usize;
            let lo_r = ((o.center.y - reach - self.origin.y) / self.cell_size).floor().max(0.0) as usize;
            let hi_c = ((o.center.x + reach - self.origin.x) / self.cell_size).ceil();
            let hi_r = ((o.center.y + reach - self.origin.y) / self.cell_size).ceil();
            if hi_c < 0.0 || hi_r < 0.0 {
                continue;
            }
            let hi_c = (hi_c as usize).min(self.cols);
            let hi_r = (hi_r as usize).min(self.rows);
            for r in lo_r..hi_r {
                for c in lo_c..hi_c {
                    if distance(self.center((c, r)), o.center) < reach {
                        self.blocked[r * self.cols + c] = true;
                    }
                }
            }
        }
    }

    pub fn is_blocked(&self, (c, r): Cell) -> bool {
        self.blocked[r * self.cols + c]
    }

    pub fn center(&self, (c, r): Cell) -> Vec2 {
        Vec2::new(
            self.origin.x + (c as f64 + 0.5) * self.cell_size,
            self.origin.y + (r as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn cell_of(&self, p: Vec2) -> Option<Cell> {
        let c = ((p.x - self.origin.x) / self.cell_size).floor();
        let r = ((p.y - self.origin.y) / self.cell_size).floor();
        (c >= 0.0 && r >= 0.0 && (c as usize) < self.cols && (r as usize) < self.rows)
            .then_some((c as usize, r as usize))
    }

    /// Free cell nearest to `p` within `max_cells` rings of its own cell.
    fn nearest_free(&self, p: Vec2, max_cells: usize) -> Option<Cell> {
        let (c0, r0) = self.cell_of(p)?;
        if !self.is_blocked((c0, r0)) {
            return Some((c0, r0));
        }
        let mut best: Option<(Cell, f64)> = None;
        let lo_c = c0.saturating_sub(max_cells);
        let lo_r = r0.saturating_sub(max_cells);
        for r in lo_r..=(r0 + max_cells).min(self.rows - 1) {
            for c in lo_c..=(c0 + max_cells).min(self.cols - 1) {
                if self.is_blocked((c, r)) {
                    continue;
                }
                let d = distance(self.center((c, r)), p);
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some(((c, r), d));
                }
            }
        }
        best.map(|(cell, _)| cell)
    }

    /// Neighbours of `cell` with unit step cost multipliers (1 or sqrt 2).
    /// Diagonal moves require both adjacent orthogonal cells to be free.
    pub fn neighbours(&self, (c, r): Cell, out: &mut Vec<(Cell, bool)>) {
        out.clear();
        let (c, r) = (c as isize, r as isize);
        let free = |c: isize, r: isize| {
            c >= 0
                && r >= 0
                && (c as usize) < self.cols
                && (r as usize) < self.rows
                && !self.is_blocked((c as usize, r as usize))
        };
        for dr in -1isize..=1 {
            for dc in -1isize..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let (nc, nr) = (c + dc, r + dr);
                if !free(nc, nr) {
                    continue;
                }
                let diagonal = dr != 0 && dc != 0;
                if diagonal && !(free(c + dc, r) && free(c, r + dr)) {
                    continue;
                }
                out.push(((nc as usize, nr as usize), diagonal));
            }
        }
    }
}

/// A grid route with its move counts; cost is
/// `cell_size * (straight + sqrt(2) * diagonal)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRoute {
    pub cells: Vec<Cell>,
    pub straight: usize,
    pub diagonal: usize,
}

impl GridRoute {
    pub fn cost(&self, cell_size: f64) -> f64 {
        cell_size * (self.straight as f64 + SQRT_2 * self.diagonal as f64)
    }
}

fn octile(a: Cell, b: Cell) -> f64 {
    let dx = a.0.abs_diff(b.0) as f64;
    let dy = a.1.abs_diff(b.1) as f64;
    dx.max(dy) + (SQRT_2 - 1.0) * dx.min(dy)
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    h: f64,
    seq: u64,
    node: usize,
}

impl Eq for Open {}

impl Ord for Open {
    // Min-heap on f, then on h, then FIFO.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest 8-connected route between two free cells, in unit cell costs.
pub fn search(grid: &Grid, start: Cell, goal: Cell) -> Option<GridRoute> {
    if grid.is_blocked(start) || grid.is_blocked(goal) {
        return None;
    }
    let n = grid.cols * grid.rows;
    let index = |(c, r): Cell| r * grid.cols + c;
    let cell = |i: usize| (i % grid.cols, i / grid.cols);
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    let mut nbrs = Vec::with_capacity(8);

    let s = index(start);
    let goal_i = index(goal);
    g[s] = 0.0;
    let h0 = octile(start, goal);
    open.push(Open { f: h0, h: h0, seq, node: s });

    while let Some(Open { node, .. }) = open.pop() {
        if closed[node] {
            continue;
        }
        closed[node] = true;
        if node == goal_i {
            break;
        }
        grid.neighbours(cell(node), &mut nbrs);
        for &(nc, diagonal) in &nbrs {
            let j = index(nc);
            if closed[j] {
                continue;
            }
            let tentative = g[node] + if diagonal { SQRT_2 } else { 1.0 };
            if tentative < g[j] {
                g[j] = tentative;
                parent[j] = node;
                let h = octile(nc, goal);
                seq += 1;
                open.push(Open { f: tentative + h, h, seq, node: j });
            }
        }
    }
    if !closed[goal_i] {
        return None;
    }

    let mut cells = vec![goal];
    let (mut straight, mut diag) = (0, 0);
    let mut cur = goal_i;
    while cur != s {
        let p = parent[cur];
        let (a, b) = (cell(p), cell(cur));
        if a.0 != b.0 && a.1 != b.1 {
            diag += 1;
        } else {
            straight += 1;
        }
        cells.push(a);
        cur = p;
    }
    cells.reverse();
    Some(GridRoute {
        cells,
        straight,
        diagonal: diag,
    })
}

/// Grid A* on the known physical obstacles, inflated by the rover radius and
/// `params.astar_margin`. The returned path runs from the exact start through
/// cell centers to the exact target.
pub fn plan_astar(req: &PlanRequest, grid_cell: f64) -> PlanResult {
    let params = &req.params;
    let no_path = || PlanResult::new(PlanStatus::NoPath, Path::from_start(req.start), 0);
    if !(grid_cell > 0.0) {
        return no_path();
    }
    let bounds = req.bounds.unwrap_or_else(|| {
        let pts = req
            .known_obstacles
            .iter()
            .flat_map(|o| {
                let r = Vec2::new(o.radius, o.radius);
                [o.center - r, o.center + r]
            })
            .chain([req.start, req.target]);
        Rect::bounding(pts, DEFAULT_GRID_MARGIN).expect("at least two points")
    });
    let mut grid = Grid::new(bounds, grid_cell);
    grid.block_obstacles(&req.known_obstacles, params.rover_radius, params.astar_margin);

    // The rover may sit in an inflated cell after a new detection; step to the
    // nearest free cell within the inflation width.
    let slack = ((params.rover_radius + params.astar_margin) / grid_cell).ceil() as usize + 1;
    let Some(start) = grid.nearest_free(req.start, slack) else {
        return no_path();
    };
    let Some(goal) = grid.cell_of(req.target) else {
        return no_path();
    };
    let Some(route) = search(&grid, start, goal) else {
        return no_path();
    };
    // The exact start and target replace the centers of the cells they lie in.
    let mut centers: Vec<Vec2> = route.cells.iter().map(|&c| grid.center(c)).collect();
    if grid.cell_of(req.start) == Some(start) {
        centers.remove(0);
    }
    if centers.last().is_some() {
        centers.pop();
    }
    let points = std::iter::once(req.start)
        .chain(centers)
        .chain(std::iter::once(req.target));
    PlanResult::new(PlanStatus::Reached, Path::from_points(points), 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::PlannerParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Uniform-cost search over the same moves, returning (straight, diagonal)
    /// of a cheapest route.
    fn dijkstra(grid: &Grid, start: Cell, goal: Cell) -> Option<(usize, usize)> {
        let n = grid.cols * grid.rows;
        let idx = |(c, r): Cell| r * grid.cols + c;
        let mut best = vec![(f64::INFINITY, 0usize, 0usize); n];
        let mut done = vec![false; n];
        best[idx(start)] = (0.0, 0, 0);
        let mut nbrs = Vec::new();
        loop {
            // O(n^2) selection keeps the oracle independent of the heap code.
            let mut u = None;
            for i in 0..n {
                if !done[i] && best[i].0.is_finite() && u.is_none_or(|j: usize| best[i].0 < best[j].0) {
                    u = Some(i);
                }
            }
            let u = u?;
            if u == idx(goal) {
                return Some((best[u].1, best[u].2));
            }
            done[u] = true;
            grid.neighbours((u % grid.cols, u / grid.cols), &mut nbrs);
            for &(v, diag) in &nbrs {
                let (d, s, g) = best[u];
                let cand = if diag { (d + SQRT_2, s, g + 1) } else { (d + 1.0, s + 1, g) };
                if cand.0 < best[idx(v)].0 {
                    best[idx(v)] = cand;
                }
            }
        }
    }

    fn random_grid(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Grid {
        let mask = (0..n * n).map(|_| rng.random_bool(density)).collect();
        Grid::from_mask(n, n, 1.0, mask)
    }

    #[test]
    fn matches_dijkstra_on_random_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut compared = 0;
        while compared < 50 {
            let mut grid = random_grid(&mut rng, 50, 0.3);
            let start = (rng.random_range(0..50), rng.random_range(0..50));
            let goal = (rng.random_range(0..50), rng.random_range(0..50));
            grid.blocked[start.1 * 50 + start.0] = false;
            grid.blocked[goal.1 * 50 + goal.0] = false;
            let got = search(&grid, start, goal);
            let want = dijkstra(&grid, start, goal);
            match (got, want) {
                (Some(route), Some((s, d))) => {
                    let oracle = GridRoute { cells: vec![], straight: s, diagonal: d };
                    assert_eq!(route.cost(1.0), oracle.cost(1.0));
                    compared += 1;
                }
                (None, None) => {}
                (g, w) => panic!("A* {g:?} vs oracle {w:?}"),
            }
        }
    }

    #[test]
    fn beats_random_feasible_routes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let grid = random_grid(&mut rng, 30, 0.15);
        let start = (0, 0);
        let goal = (29, 29);
        let mut grid = grid;
        grid.blocked[0] = false;
        grid.blocked[29 * 30 + 29] = false;
        let Some(best) = search(&grid, start, goal) else {
            return;
        };
        let mut nbrs = Vec::new();
        let mut sampled = 0;
        while sampled < 100 {
            // goal-biased random walk; abandon if it wanders too long
            let (mut cur, mut cost) = (start, 0.0);
            for _ in 0..5000 {
                if cur == goal {
                    break;
                }
                grid.neighbours(cur, &mut nbrs);
                let pick = if rng.random_bool(0.7) {
                    *nbrs.iter().min_by(|a, b| octile(a.0, goal).total_cmp(&octile(b.0, goal))).unwrap()
                } else {
                    nbrs[rng.random_range(0..nbrs.len())]
                };
                cost += if pick.1 { SQRT_2 } else { 1.0 };
                cur = pick.0;
            }
            if cur == goal {
                assert!(cost >= best.cost(1.0) - 1e-9);
                sampled += 1;
            }
        }
    }

    #[test]
    fn no_corner_cutting() {
        // . #
        // # .
        let grid = Grid::from_mask(2, 2, 1.0, vec![false, true, true, false]);
        assert!(search(&grid, (0, 0), (1, 1)).is_none());
    }

    #[test]
    fn empty_map_diagonal() {
        let p = PlannerParams::default();
        let req = PlanRequest::new(Vec2::new(1.0, 1.0), Vec2::new(9.0, 9.0), vec![], p)
            .with_bounds(Rect::new(Vec2::ZERO, Vec2::new(10.0, 10.0)));
        let r = plan_astar(&req, 0.1);
        assert_eq!(r.status, PlanStatus::Reached);
        assert!((r.path.length() - 8.0 * SQRT_2).abs() <= 0.1, "{} {:?}", r.path.length(), &r.path.waypoints()[..4]);
    }

    #[test]
    fn bisecting_wall_has_no_path() {
        let wall: Vec<Obstacle> = (0..=20).map(|i| Obstacle::rock(5.0, i as f64 * 0.5, 0.3)).collect();
        let req = PlanRequest::new(Vec2::new(1.0, 5.0), Vec2::new(9.0, 5.0), wall, PlannerParams::default())
            .with_bounds(Rect::new(Vec2::ZERO, Vec2::new(10.0, 10.0)));
        assert_eq!(plan_astar(&req, 0.1).status, PlanStatus::NoPath);
    }

    #[test]
    fn waypoints_keep_clear_of_obstacles() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let obs: Vec<Obstacle> = (0..40)
            .map(|_| Obstacle::rock(rng.random_range(2.0..18.0), rng.random_range(2.0..18.0), rng.random_range(0.05..0.6)))
            .collect();
        let p = PlannerParams::default();
        let req = PlanRequest::new(Vec2::new(0.5, 0.5), Vec2::new(19.5, 19.5), obs.clone(), p.clone())
            .with_bounds(Rect::new(Vec2::ZERO, Vec2::new(20.0, 20.0)));
        let r = plan_astar(&req, 0.1);
        assert_eq!(r.status, PlanStatus::Reached);
        for w in r.path.waypoints() {
            assert!(!crate::geometry::in_collision(*w, p.rover_radius, &obs));
        }
    }
}
