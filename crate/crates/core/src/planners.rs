//! Baseline planners (RRT*, informed RRT*) and a grid shortest-path oracle.
//!
//! Obstacles are circles inflated by the clearance; a segment is valid when every
//! obstacle centre stays at least `radius + c` away from it.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{point_segment_distance, polyline_length, Point2};
use crate::scene::SceneSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub step_size: f64,
    pub goal_bias: f64,
    pub rewire_gamma: f64,
    /// Upper bound on the rewiring radius, in multiples of `step_size`.
    pub rewire_cap: f64,
    pub max_iterations: usize,
    /// Seconds; `None` for no wall-clock limit.
    pub max_time: Option<f64>,
    pub clearance: f64,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            step_size: 2.0,
            goal_bias: 0.05,
            rewire_gamma: 2.0,
            rewire_cap: 3.0,
            max_iterations: 5_000,
            max_time: None,
            clearance: 3.0,
            seed: 0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlannerError> {
        if !(self.step_size > 0.0) {
            return Err(PlannerError::InvalidConfig("step_size must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.goal_bias) {
            return Err(PlannerError::InvalidConfig("goal_bias must be in [0, 1]".into()));
        }
        if !(self.clearance >= 0.0) || !(self.rewire_gamma > 0.0) || !(self.rewire_cap > 0.0) {
            return Err(PlannerError::InvalidConfig("clearance and rewiring must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerResult {
    pub path: Option<Vec<Point2>>,
    pub cost: f64,
    pub iterations: usize,
    /// Seconds.
    pub elapsed: f64,
    pub success: bool,
    /// `(iteration, best cost)` at every improvement.
    pub cost_trace: Vec<(usize, f64)>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("no solution within budget ({} iterations)", .0.iterations)]
    NoSolution(Box<PlannerResult>),
    #[error("target cost not reached within budget")]
    BudgetExhausted(Box<PlannerResult>),
    #[error("start or goal violates clearance")]
    InvalidEndpoints,
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
}

impl PlannerError {
    /// The run's result, when the error carries one.
    pub fn result(&self) -> Option<&PlannerResult> {
        match self {
            PlannerError::NoSolution(r) | PlannerError::BudgetExhausted(r) => Some(r),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlannerKind {
    RrtStar,
    IrrtStar,
}

/// Continuous collision model of a scene at a given clearance.
#[derive(Debug, Clone)]
pub struct CollisionChecker {
    bounds: [f64; 2],
    /// `(centre, radius + c)`.
    discs: Vec<(Point2, f64)>,
}

impl CollisionChecker {
    pub fn new(scene: &SceneSpec, c: f64) -> Self {
        Self {
            bounds: scene.bounds,
            discs: scene.obstacles.iter().map(|o| (o.center, o.radius + c)).collect(),
        }
    }

    pub fn point_free(&self, p: Point2) -> bool {
        p.x >= 0.0
            && p.y >= 0.0
            && p.x <= self.bounds[0]
            && p.y <= self.bounds[1]
            && self.discs.iter().all(|&(o, r)| p.distance(o) >= r)
    }

    /// Both endpoints are assumed inside the bounds, which are convex.
    pub fn segment_free(&self, a: Point2, b: Point2) -> bool {
        self.discs.iter().all(|&(o, r)| point_segment_distance(o, a, b) >= r)
    }
}

/// Uniform sample from the prolate ellipse with foci `start`, `goal` and transverse
/// diameter `c_best`.
pub fn sample_informed<R: Rng + ?Sized>(start: Point2, goal: Point2, c_best: f64, rng: &mut R) -> Point2 {
    let c_min = start.distance(goal);
    let a = 0.5 * c_best;
    let b = 0.5 * (c_best * c_best - c_min * c_min).max(0.0).sqrt();
    let r = rng.gen::<f64>().sqrt();
    let th = rng.gen_range(0.0..std::f64::consts::TAU);
    let local = Point2::new(a * r * th.cos(), b * r * th.sin());
    let axis = if c_min > 0.0 { (goal - start).angle() } else { 0.0 };
    start.lerp(goal, 0.5) + local.rotated(axis)
}

/// Uniform bucket grid over the bounds for nearest and radius queries.
#[derive(Debug, Clone)]
struct SpatialHash {
    cell: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<usize>>,
}

impl SpatialHash {
    fn new(bounds: [f64; 2], cell: f64) -> Self {
        let cols = ((bounds[0] / cell).ceil() as usize).max(1);
        let rows = ((bounds[1] / cell).ceil() as usize).max(1);
        Self {
            cell,
            cols,
            rows,
            buckets: vec![Vec::new(); cols * rows],
        }
    }

    fn coords(&self, p: Point2) -> (i64, i64) {
        let i = ((p.x / self.cell).floor() as i64).clamp(0, self.cols as i64 - 1);
        let j = ((p.y / self.cell).floor() as i64).clamp(0, self.rows as i64 - 1);
        (i, j)
    }

    fn insert(&mut self, p: Point2, id: usize) {
        let (i, j) = self.coords(p);
        self.buckets[j as usize * self.cols + i as usize].push(id);
    }

    fn bucket(&self, i: i64, j: i64) -> &[usize] {
        if i < 0 || j < 0 || i >= self.cols as i64 || j >= self.rows as i64 {
            return &[];
        }
        &self.buckets[j as usize * self.cols + i as usize]
    }

    fn nearest(&self, p: Point2, pts: &[Point2]) -> usize {
        let (ci, cj) = self.coords(p);
        let mut best = (f64::INFINITY, usize::MAX);
        let max_ring = self.cols.max(self.rows) as i64;
        for ring in 0..=max_ring {
            for j in cj - ring..=cj + ring {
                for i in ci - ring..=ci + ring {
                    if (i - ci).abs() != ring && (j - cj).abs() != ring {
                        continue;
                    }
                    for &id in self.bucket(i, j) {
                        let d = pts[id].distance(p);
                        if d < best.0 || (d == best.0 && id < best.1) {
                            best = (d, id);
                        }
                    }
                }
            }
            // Anything in a farther ring is at least `ring * cell` away.
            if best.1 != usize::MAX && best.0 <= ring as f64 * self.cell {
                break;
            }
        }
        best.1
    }

    fn within(&self, p: Point2, r: f64, pts: &[Point2], out: &mut Vec<usize>) {
        out.clear();
        let (i0, j0) = self.coords(p - Point2::new(r, r));
        let (i1, j1) = self.coords(p + Point2::new(r, r));
        for j in j0..=j1 {
            for i in i0..=i1 {
                out.extend(self.bucket(i, j).iter().copied().filter(|&id| pts[id].distance(p) <= r));
            }
        }
        out.sort_unstable();
    }
}

/// Incremental RRT* tree. Each [`RrtStar::step`] draws one sample.
#[derive(Debug, Clone)]
pub struct RrtStar {
    cfg: PlannerConfig,
    informed: bool,
    start: Point2,
    goal: Point2,
    bounds: [f64; 2],
    checker: CollisionChecker,
    rng: ChaCha8Rng,
    points: Vec<Point2>,
    parent: Vec<usize>,
    cost: Vec<f64>,
    children: Vec<Vec<usize>>,
    hash: SpatialHash,
    gamma: f64,
    goal_nodes: Vec<usize>,
    best: Option<(usize, f64)>,
    iterations: usize,
    trace: Vec<(usize, f64)>,
    /// Samples drawn after the first solution, kept for inspection.
    pub record_informed_samples: bool,
    pub informed_samples: Vec<(Point2, f64)>,
    near_buf: Vec<usize>,
}

impl RrtStar {
    pub fn new(scene: &SceneSpec, cfg: &PlannerConfig, informed: bool) -> Result<Self, PlannerError> {
        cfg.validate()?;
        let checker = CollisionChecker::new(scene, cfg.clearance);
        if !checker.point_free(scene.start) || !checker.point_free(scene.goal) {
            return Err(PlannerError::InvalidEndpoints);
        }
        let area = scene.bounds[0] * scene.bounds[1];
        let mut hash = SpatialHash::new(scene.bounds, cfg.step_size.max(1e-6));
        hash.insert(scene.start, 0);
        Ok(Self {
            cfg: cfg.clone(),
            informed,
            start: scene.start,
            goal: scene.goal,
            bounds: scene.bounds,
            checker,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            points: vec![scene.start],
            parent: vec![0],
            cost: vec![0.0],
            children: vec![Vec::new()],
            hash,
            gamma: cfg.rewire_gamma * (area / std::f64::consts::PI).sqrt(),
            goal_nodes: Vec::new(),
            best: None,
            iterations: 0,
            trace: Vec::new(),
            record_informed_samples: false,
            informed_samples: Vec::new(),
            near_buf: Vec::new(),
        })
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn best_cost(&self) -> f64 {
        self.best.map_or(f64::INFINITY, |(_, c)| c)
    }

    pub fn node_count(&self) -> usize {
        self.points.len()
    }

    /// `(point, parent index, cost-to-come)` of every node; the root is its own parent.
    pub fn nodes(&self) -> impl Iterator<Item = (Point2, usize, f64)> + '_ {
        (0..self.points.len()).map(move |k| (self.points[k], self.parent[k], self.cost[k]))
    }

    pub fn best_path(&self) -> Option<Vec<Point2>> {
        let (mut k, _) = self.best?;
        let mut path = Vec::new();
        if self.points[k] != self.goal {
            path.push(self.goal);
        }
        loop {
            path.push(self.points[k]);
            if k == 0 {
                break;
            }
            k = self.parent[k];
        }
        path.reverse();
        Some(path)
    }

    pub fn cost_trace(&self) -> &[(usize, f64)] {
        &self.trace
    }

    fn sample(&mut self) -> Point2 {
        if self.rng.gen::<f64>() < self.cfg.goal_bias {
            return self.goal;
        }
        let c_best = self.best_cost();
        if self.informed && c_best.is_finite() {
            for _ in 0..100 {
                let q = sample_informed(self.start, self.goal, c_best, &mut self.rng);
                if q.x >= 0.0 && q.y >= 0.0 && q.x <= self.bounds[0] && q.y <= self.bounds[1] {
                    if self.record_informed_samples {
                        self.informed_samples.push((q, c_best));
                    }
                    return q;
                }
            }
        }
        Point2::new(
            self.rng.gen_range(0.0..=self.bounds[0]),
            self.rng.gen_range(0.0..=self.bounds[1]),
        )
    }

    fn radius(&self) -> f64 {
        let n = self.points.len() as f64 + 1.0;
        (self.gamma * (n.ln() / n).sqrt()).min(self.cfg.step_size * self.cfg.rewire_cap)
    }

    fn reparent(&mut self, k: usize, new_parent: usize, new_cost: f64) {
        let old = self.parent[k];
        if let Some(pos) = self.children[old].iter().position(|&c| c == k) {
            self.children[old].swap_remove(pos);
        }
        self.parent[k] = new_parent;
        self.children[new_parent].push(k);
        let delta = new_cost - self.cost[k];
        let mut stack = vec![k];
        while let Some(m) = stack.pop() {
            self.cost[m] += delta;
            stack.extend(self.children[m].iter().copied());
        }
    }

    fn refresh_best(&mut self) {
        let mut best = self.best;
        for &k in &self.goal_nodes {
            let c = self.cost[k] + self.points[k].distance(self.goal);
            if best.is_none_or(|(_, b)| c < b) {
                best = Some((k, c));
            }
        }
        if let Some((k, c)) = best {
            if self.best.is_none_or(|(_, b)| c < b) {
                self.trace.push((self.iterations, c));
            }
            self.best = Some((k, c));
        }
    }

    /// One sampling iteration.
    pub fn step(&mut self) {
        self.iterations += 1;
        let q = self.sample();
        let near_id = self.hash.nearest(q, &self.points);
        let from = self.points[near_id];
        let d = from.distance(q);
        if d == 0.0 {
            return;
        }
        let x_new = if d > self.cfg.step_size {
            from + (q - from) * (self.cfg.step_size / d)
        } else {
            q
        };
        if !self.checker.point_free(x_new) || !self.checker.segment_free(from, x_new) {
            return;
        }
        let r = self.radius();
        let mut near = std::mem::take(&mut self.near_buf);
        self.hash.within(x_new, r, &self.points, &mut near);

        let mut parent = near_id;
        let mut best_cost = self.cost[near_id] + d.min(self.cfg.step_size);
        let mut cands: Vec<(f64, usize)> = near
            .iter()
            .map(|&k| (self.cost[k] + self.points[k].distance(x_new), k))
            .filter(|&(c, k)| k != near_id && c < best_cost)
            .collect();
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (c, k) in cands {
            if self.checker.segment_free(self.points[k], x_new) {
                parent = k;
                best_cost = c;
                break;
            }
        }

        let id = self.points.len();
        self.points.push(x_new);
        self.parent.push(parent);
        self.cost.push(best_cost);
        self.children.push(Vec::new());
        self.children[parent].push(id);
        self.hash.insert(x_new, id);

        for &k in &near {
            if k == parent {
                continue;
            }
            let c = best_cost + x_new.distance(self.points[k]);
            if c < self.cost[k] && self.checker.segment_free(x_new, self.points[k]) {
                self.reparent(k, id, c);
            }
        }
        self.near_buf = near;

        if x_new.distance(self.goal) <= self.cfg.step_size && self.checker.segment_free(x_new, self.goal) {
            self.goal_nodes.push(id);
        }
        if !self.goal_nodes.is_empty() {
            self.refresh_best();
        }
    }

    pub fn result(&self, elapsed: f64) -> PlannerResult {
        let path = self.best_path();
        let cost = path.as_ref().map_or(f64::INFINITY, |p| polyline_length(p));
        PlannerResult {
            success: path.is_some(),
            path,
            cost,
            iterations: self.iterations,
            elapsed,
            cost_trace: self.trace.clone(),
        }
    }
}

/// Stopping budget of a planner run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub max_iterations: usize,
    pub max_time: Option<Duration>,
}

impl Budget {
    pub fn of(cfg: &PlannerConfig) -> Self {
        Self {
            max_iterations: cfg.max_iterations,
            max_time: cfg.max_time.map(Duration::from_secs_f64),
        }
    }
}

/// Steps until `stop` holds or the budget runs out. Returns the elapsed time and whether
/// `stop` fired.
fn drive(tree: &mut RrtStar, budget: Budget, mut stop: impl FnMut(&RrtStar) -> bool) -> (f64, bool) {
    let t0 = Instant::now();
    loop {
        if stop(tree) {
            return (t0.elapsed().as_secs_f64(), true);
        }
        if tree.iterations() >= budget.max_iterations {
            break;
        }
        if let Some(limit) = budget.max_time {
            if t0.elapsed() >= limit {
                break;
            }
        }
        tree.step();
    }
    (t0.elapsed().as_secs_f64(), false)
}

fn run(scene: &SceneSpec, cfg: &PlannerConfig, informed: bool) -> Result<PlannerResult, PlannerError> {
    let mut tree = RrtStar::new(scene, cfg, informed)?;
    let (elapsed, _) = drive(&mut tree, Budget::of(cfg), |_| false);
    let res = tree.result(elapsed);
    if res.success {
        Ok(res)
    } else {
        Err(PlannerError::NoSolution(Box::new(res)))
    }
}

pub fn rrt_star(scene: &SceneSpec, cfg: &PlannerConfig) -> Result<PlannerResult, PlannerError> {
    run(scene, cfg, false)
}

pub fn informed_rrt_star(scene: &SceneSpec, cfg: &PlannerConfig) -> Result<PlannerResult, PlannerError> {
    run(scene, cfg, true)
}

/// Runs until the best cost is within `margin` of `target_cost`.
///
/// On success `elapsed` is the time of the stopping event. On failure the error carries
/// the best result found, with `elapsed` set to the time budget when there is one.
pub fn run_until_cost(
    kind: PlannerKind,
    scene: &SceneSpec,
    cfg: &PlannerConfig,
    target_cost: f64,
    margin: f64,
    budget: Budget,
) -> Result<PlannerResult, PlannerError> {
    if !(margin >= 0.0) {
        return Err(PlannerError::InvalidConfig("margin must be non-negative".into()));
    }
    let mut tree = RrtStar::new(scene, cfg, kind == PlannerKind::IrrtStar)?;
    let goal = target_cost * (1.0 + margin);
    let (elapsed, hit) = drive(&mut tree, budget, |t| t.best_cost() <= goal);
    let mut res = tree.result(elapsed);
    if hit {
        Ok(res)
    } else {
        if let Some(limit) = budget.max_time {
            res.elapsed = limit.as_secs_f64();
        }
        res.success = false;
        Err(PlannerError::BudgetExhausted(Box::new(res)))
    }
}

/// First time a run reached `target_cost * (1 + margin)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginHit {
    pub margin: f64,
    /// Seconds.
    pub elapsed: f64,
    pub cost: f64,
    pub iterations: usize,
}

/// One run towards the tightest margin, recording when each looser margin was first met.
///
/// With the same seed, the hit for margin `m` equals the stopping event of
/// [`run_until_cost`] at `m`, since the tree grows independently of the target.
pub fn run_to_margins(
    kind: PlannerKind,
    scene: &SceneSpec,
    cfg: &PlannerConfig,
    target_cost: f64,
    margins: &[f64],
    budget: Budget,
) -> Result<(PlannerResult, Vec<Option<MarginHit>>), PlannerError> {
    if margins.iter().any(|m| !(*m >= 0.0)) {
        return Err(PlannerError::InvalidConfig("margin must be non-negative".into()));
    }
    let mut tree = RrtStar::new(scene, cfg, kind == PlannerKind::IrrtStar)?;
    let mut hits: Vec<Option<MarginHit>> = vec![None; margins.len()];
    let t0 = Instant::now();
    let (elapsed, _) = drive(&mut tree, budget, |t| {
        let best = t.best_cost();
        for (h, &m) in hits.iter_mut().zip(margins) {
            if h.is_none() && best <= target_cost * (1.0 + m) {
                *h = Some(MarginHit {
                    margin: m,
                    elapsed: t0.elapsed().as_secs_f64(),
                    cost: best,
                    iterations: t.iterations(),
                });
            }
        }
        hits.iter().all(Option::is_some)
    });
    Ok((tree.result(elapsed), hits))
}

/// 8-connected Dijkstra over a `resolution x resolution` grid of the bounds. A cell is
/// free when its centre keeps clearance `c` from every obstacle; the cells holding the
/// start and goal are always usable. The cost includes the links from start and goal to
/// their cell centres. Infinite when the goal is unreachable.
pub fn grid_dijkstra_oracle(scene: &SceneSpec, c: f64, resolution: usize) -> f64 {
    match grid_search(scene, c, resolution) {
        Some(s) => scene.start.distance(s.cells[0]) + s.cost + s.cells.last().unwrap().distance(scene.goal),
        None => f64::INFINITY,
    }
}

/// The oracle's path: start, the visited cell centres, goal.
pub fn grid_oracle_path(scene: &SceneSpec, c: f64, resolution: usize) -> Option<Vec<Point2>> {
    let s = grid_search(scene, c, resolution)?;
    let mut path = Vec::with_capacity(s.cells.len() + 2);
    path.push(scene.start);
    path.extend(s.cells);
    path.push(scene.goal);
    Some(path)
}

/// Greedy string pulling: from each kept point jump to the farthest later point that is
/// visible with clearance. Falls back to the next point when none is, so a grid path that
/// leaves a forced start or goal cell stays connected.
pub fn shortcut_path(path: &[Point2], checker: &CollisionChecker) -> Vec<Point2> {
    let Some(&first) = path.first() else {
        return Vec::new();
    };
    let mut out = vec![first];
    let mut i = 0;
    while i + 1 < path.len() {
        let next = (i + 2..path.len())
            .rev()
            .find(|&j| checker.segment_free(path[i], path[j]))
            .unwrap_or(i + 1);
        out.push(path[next]);
        i = next;
    }
    out
}

/// Near-Euclidean reference cost: the grid oracle's path after [`shortcut_path`]. Never
/// above [`grid_dijkstra_oracle`]; infinite when the grid finds no path.
pub fn shortcut_oracle_cost(scene: &SceneSpec, c: f64, resolution: usize) -> f64 {
    match grid_oracle_path(scene, c, resolution) {
        Some(p) => polyline_length(&shortcut_path(&p, &CollisionChecker::new(scene, c))),
        None => f64::INFINITY,
    }
}

struct GridPath {
    cells: Vec<Point2>,
    cost: f64,
}

fn grid_search(scene: &SceneSpec, c: f64, resolution: usize) -> Option<GridPath> {
    let (nx, ny) = (resolution, resolution);
    let (hx, hy) = (scene.bounds[0] / nx as f64, scene.bounds[1] / ny as f64);
    let centre = |i: usize, j: usize| Point2::new((i as f64 + 0.5) * hx, (j as f64 + 0.5) * hy);
    let cell_of = |p: Point2| {
        let i = ((p.x / hx).floor() as i64).clamp(0, nx as i64 - 1) as usize;
        let j = ((p.y / hy).floor() as i64).clamp(0, ny as i64 - 1) as usize;
        (i, j)
    };
    let mut free = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let p = centre(i, j);
            free[j * nx + i] = scene.obstacles.iter().all(|o| p.distance(o.center) >= o.radius + c);
        }
    }
    let (si, sj) = cell_of(scene.start);
    let (gi, gj) = cell_of(scene.goal);
    free[sj * nx + si] = true;
    free[gj * nx + gi] = true;

    let mut dist = vec![f64::INFINITY; nx * ny];
    let mut prev = vec![usize::MAX; nx * ny];
    let mut heap = BinaryHeap::new();
    let s = sj * nx + si;
    dist[s] = 0.0;
    heap.push(Reverse((0u64, s)));
    let g = gj * nx + gi;
    let moves: [(i64, i64, f64); 8] = [
        (1, 0, hx),
        (-1, 0, hx),
        (0, 1, hy),
        (0, -1, hy),
        (1, 1, hx.hypot(hy)),
        (1, -1, hx.hypot(hy)),
        (-1, 1, hx.hypot(hy)),
        (-1, -1, hx.hypot(hy)),
    ];
    while let Some(Reverse((bits, k))) = heap.pop() {
        let d = f64::from_bits(bits);
        if d > dist[k] {
            continue;
        }
        if k == g {
            break;
        }
        let (i, j) = ((k % nx) as i64, (k / nx) as i64);
        for &(di, dj, w) in &moves {
            let (ni, nj) = (i + di, j + dj);
            if ni < 0 || nj < 0 || ni >= nx as i64 || nj >= ny as i64 {
                continue;
            }
            let nk = nj as usize * nx + ni as usize;
            if !free[nk] {
                continue;
            }
            let nd = d + w;
            if nd < dist[nk] {
                dist[nk] = nd;
                prev[nk] = k;
                heap.push(Reverse((nd.to_bits(), nk)));
            }
        }
    }
    if dist[g].is_infinite() {
        return None;
    }
    let mut cells = vec![g];
    while *cells.last().unwrap() != s {
        cells.push(prev[*cells.last().unwrap()]);
    }
    cells.reverse();
    Some(GridPath {
        cells: cells.into_iter().map(|k| centre(k % nx, k / nx)).collect(),
        cost: dist[g],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{Obstacle, ObstacleRole};

    fn empty(start: Point2, goal: Point2) -> SceneSpec {
        SceneSpec::empty([64.0, 64.0], start, goal, 1.0)
    }

    #[test]
    fn spatial_hash_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Point2> = (0..500)
            .map(|_| Point2::new(rng.gen_range(0.0..64.0), rng.gen_range(0.0..64.0)))
            .collect();
        let mut h = SpatialHash::new([64.0, 64.0], 2.0);
        for (k, &p) in pts.iter().enumerate() {
            h.insert(p, k);
        }
        let mut buf = Vec::new();
        for _ in 0..200 {
            let q = Point2::new(rng.gen_range(-5.0..70.0), rng.gen_range(-5.0..70.0));
            let brute = (0..pts.len())
                .min_by(|&a, &b| pts[a].distance(q).total_cmp(&pts[b].distance(q)))
                .unwrap();
            assert_eq!(pts[h.nearest(q, &pts)].distance(q), pts[brute].distance(q));
            h.within(q, 5.5, &pts, &mut buf);
            let want: Vec<usize> = (0..pts.len()).filter(|&k| pts[k].distance(q) <= 5.5).collect();
            assert_eq!(buf, want);
        }
    }

    #[test]
    fn informed_samples_lie_in_ellipse() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (s, g) = (Point2::new(5.0, 5.0), Point2::new(40.0, 20.0));
        let c_best = 1.3 * s.distance(g);
        for _ in 0..10_000 {
            let q = sample_informed(s, g, c_best, &mut rng);
            assert!(q.distance(s) + q.distance(g) <= c_best + 1e-9);
        }
    }

    #[test]
    fn trace_is_monotone_and_cost_matches_path() {
        let scene = empty(Point2::new(5.0, 5.0), Point2::new(55.0, 55.0));
        let cfg = PlannerConfig { seed: 3, ..Default::default() };
        let res = rrt_star(&scene, &cfg).unwrap();
        assert!(res.cost_trace.windows(2).all(|w| w[1].1 <= w[0].1));
        let path = res.path.unwrap();
        assert!((polyline_length(&path) - res.cost).abs() < 1e-9);
        assert!((res.cost_trace.last().unwrap().1 - res.cost).abs() < 1e-9);
    }

    #[test]
    fn enclosed_goal_has_no_solution() {
        let mut scene = empty(Point2::new(5.0, 5.0), Point2::new(40.0, 40.0));
        for k in 0..36 {
            let a = k as f64 * std::f64::consts::TAU / 36.0;
            let c = Point2::new(40.0, 40.0) + Point2::from_angle(a) * 10.0;
            scene.obstacles.push(Obstacle::new(1.5, c, ObstacleRole::Filler));
        }
        let cfg = PlannerConfig { max_iterations: 3_000, ..Default::default() };
        assert!(matches!(rrt_star(&scene, &cfg), Err(PlannerError::NoSolution(_))));
        assert!(matches!(informed_rrt_star(&scene, &cfg), Err(PlannerError::NoSolution(_))));
        assert!(grid_dijkstra_oracle(&scene, 1.0, 128).is_infinite());
    }

    #[test]
    fn tree_edges_are_collision_free() {
        let mut scene = empty(Point2::new(5.0, 32.0), Point2::new(59.0, 32.0));
        scene.obstacles.push(Obstacle::new(8.0, Point2::new(32.0, 30.0), ObstacleRole::Filler));
        scene.obstacles.push(Obstacle::new(4.0, Point2::new(45.0, 50.0), ObstacleRole::Filler));
        let cfg = PlannerConfig { seed: 2, ..Default::default() };
        let mut tree = RrtStar::new(&scene, &cfg, false).unwrap();
        for _ in 0..3_000 {
            tree.step();
        }
        let checker = CollisionChecker::new(&scene, cfg.clearance);
        let nodes: Vec<_> = tree.nodes().collect();
        assert_eq!(nodes[0].0, scene.start);
        assert_eq!(nodes[0].1, 0);
        for (p, parent, cost) in &nodes[1..] {
            let q = nodes[*parent].0;
            assert!(checker.segment_free(q, *p));
            assert!((nodes[*parent].2 + q.distance(*p) - cost).abs() < 1e-6);
        }
    }

    #[test]
    fn oracle_empty_world_within_metric_bound() {
        // Grid part is at most 1.0824x Euclidean; the two links to cell centres add at
        // most one cell diagonal.
        let diag = 0.5f64.hypot(0.5);
        for (s, g) in [
            (Point2::new(0.2, 0.2), Point2::new(63.8, 63.8)),
            (Point2::new(3.0, 10.0), Point2::new(60.0, 35.0)),
            (Point2::new(1.0, 50.0), Point2::new(62.0, 3.3)),
        ] {
            let d = grid_dijkstra_oracle(&empty(s, g), 1.0, 128);
            let e = s.distance(g);
            assert!(d >= e - 1e-9 && d <= 1.0824 * e + diag, "{d} vs {e}");
        }
        let (s, g) = (Point2::new(0.2, 0.2), Point2::new(63.8, 63.8));
        assert!(grid_dijkstra_oracle(&empty(s, g), 1.0, 128) <= 1.09 * s.distance(g));
    }

    #[test]
    fn oracle_uses_gap_in_wall() {
        let mut scene = empty(Point2::new(10.0, 32.0), Point2::new(54.0, 32.0));
        for k in 0..32 {
            let y = 1.0 + 2.0 * k as f64;
            if (y - 50.0).abs() < 6.0 {
                continue;
            }
            scene.obstacles.push(Obstacle::new(1.0, Point2::new(32.0, y), ObstacleRole::Filler));
        }
        let d = grid_dijkstra_oracle(&scene, 1.0, 128);
        let via_gap = scene.start.distance(Point2::new(32.0, 50.0)) + Point2::new(32.0, 50.0).distance(scene.goal);
        assert!(d.is_finite() && d >= scene.start.distance(scene.goal));
        assert!(d >= via_gap - 2.0 && d <= 1.09 * via_gap);
    }

    #[test]
    fn shortcut_oracle_pulls_the_grid_path_taut() {
        let (s, g) = (Point2::new(3.0, 10.0), Point2::new(60.0, 35.0));
        let scene = empty(s, g);
        let path = grid_oracle_path(&scene, 1.0, 128).unwrap();
        assert_eq!((path[0], *path.last().unwrap()), (s, g));
        assert!((polyline_length(&path) - grid_dijkstra_oracle(&scene, 1.0, 128)).abs() < 1e-9);
        assert_eq!(shortcut_path(&path, &CollisionChecker::new(&scene, 1.0)), vec![s, g]);
        assert!((shortcut_oracle_cost(&scene, 1.0, 128) - s.distance(g)).abs() < 1e-12);

        let mut wall = empty(Point2::new(10.0, 32.0), Point2::new(54.0, 32.0));
        for k in 0..32 {
            let y = 1.0 + 2.0 * k as f64;
            if (y - 50.0).abs() >= 6.0 {
                wall.obstacles.push(Obstacle::new(1.0, Point2::new(32.0, y), ObstacleRole::Filler));
            }
        }
        let checker = CollisionChecker::new(&wall, 1.0);
        let taut = shortcut_path(&grid_oracle_path(&wall, 1.0, 128).unwrap(), &checker);
        assert!(taut.windows(2).all(|w| checker.segment_free(w[0], w[1])));
        let cost = polyline_length(&taut);
        // Inflated wall discs leave the gap open above y = 45; the taut path grazes that corner.
        let corner = Point2::new(32.0, 45.0);
        let via_corner = wall.start.distance(corner) + corner.distance(wall.goal);
        assert!(cost <= grid_dijkstra_oracle(&wall, 1.0, 128));
        assert!(cost >= via_corner - 1e-9 && cost <= 1.02 * via_corner, "{cost} vs {via_corner}");
        assert!(shortcut_oracle_cost(&empty(s, g), 1.0, 128).is_finite());
    }

    #[test]
    fn run_until_cost_stops_at_first_solution_with_huge_margin() {
        let scene = empty(Point2::new(5.0, 5.0), Point2::new(55.0, 55.0));
        let cfg = PlannerConfig::default();
        let budget = Budget { max_iterations: 100_000, max_time: None };
        let res = run_until_cost(PlannerKind::RrtStar, &scene, &cfg, 1.0, 1e12, budget).unwrap();
        assert_eq!(res.cost_trace.len(), 1);
        assert_eq!(res.cost_trace[0].0, res.iterations);
    }

    #[test]
    fn unattainable_target_exhausts_budget() {
        let scene = empty(Point2::new(5.0, 5.0), Point2::new(55.0, 55.0));
        let cfg = PlannerConfig::default();
        let budget = Budget { max_iterations: 2_000, max_time: Some(Duration::from_secs(30)) };
        let target = 0.9 * scene.start.distance(scene.goal);
        match run_until_cost(PlannerKind::RrtStar, &scene, &cfg, target, 0.0, budget) {
            Err(PlannerError::BudgetExhausted(r)) => {
                assert!(!r.success);
                assert_eq!(r.elapsed, 30.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn margin_hits_match_separate_runs() {
        let scene = empty(Point2::new(5.0, 5.0), Point2::new(55.0, 40.0));
        let cfg = PlannerConfig { seed: 3, ..Default::default() };
        let budget = Budget { max_iterations: 3_000, max_time: None };
        let target = scene.start.distance(scene.goal);
        let margins = [0.0, 0.02, 0.05];
        let (_, hits) = run_to_margins(PlannerKind::RrtStar, &scene, &cfg, target, &margins, budget).unwrap();
        for (m, h) in margins.iter().zip(&hits) {
            match (run_until_cost(PlannerKind::RrtStar, &scene, &cfg, target, *m, budget), h) {
                (Ok(r), Some(h)) => {
                    assert_eq!(r.iterations, h.iterations);
                    assert_eq!(r.cost, h.cost);
                }
                (Err(PlannerError::BudgetExhausted(_)), None) => {}
                (r, h) => panic!("margin {m}: {r:?} vs {h:?}"),
            }
        }
        assert!(hits[2].is_some());
    }
}
