use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::energy::EnergyModel;
use crate::geom::{dubins_shortest, DubinsPath, Se2State};
use crate::num::Real;

use super::{CostContext, PlannerConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct RrtNode<T> {
    pub state: Se2State<T>,
    pub parent: Option<usize>,
    /// Edge from the parent, `None` for the root.
    pub edge: Option<DubinsPath<T>>,
    pub edge_cost: T,
    /// Energy from the root [J].
    pub cost: T,
    pub children: Vec<usize>,
}

/// Uniform bucket grid over the sampling box, for radius queries.
#[derive(Debug, Clone)]
struct Buckets {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<usize>>,
}

impl Buckets {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64, cell: f64) -> Self {
        let nx = (((x1 - x0) / cell).ceil() as usize).max(1);
        let ny = (((y1 - y0) / cell).ceil() as usize).max(1);
        Self {
            x0,
            y0,
            cell,
            nx,
            ny,
            cells: vec![Vec::new(); nx * ny],
        }
    }

    fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let i = ((x - self.x0) / self.cell).floor().max(0.0) as usize;
        let j = ((y - self.y0) / self.cell).floor().max(0.0) as usize;
        (i.min(self.nx - 1), j.min(self.ny - 1))
    }

    fn insert(&mut self, x: f64, y: f64, id: usize) {
        let (i, j) = self.cell_of(x, y);
        self.cells[j * self.nx + i].push(id);
    }

    /// Ids in the cells at Chebyshev distance exactly `k` from `(ci, cj)`.
    fn ring(&self, ci: usize, cj: usize, k: usize, out: &mut Vec<usize>) {
        let (ci, cj, k) = (ci as isize, cj as isize, k as isize);
        for j in (cj - k)..=(cj + k) {
            if j < 0 || j >= self.ny as isize {
                continue;
            }
            let edge_row = j == cj - k || j == cj + k;
            let step = if edge_row || k == 0 { 1 } else { (2 * k) as usize };
            let mut i = ci - k;
            while i <= ci + k {
                if i >= 0 && i < self.nx as isize {
                    out.extend_from_slice(&self.cells[j as usize * self.nx + i as usize]);
                }
                i += step as isize;
            }
        }
    }

    fn max_ring(&self) -> usize {
        self.nx.max(self.ny)
    }
}

/// Candidate connection evaluated during parent choice or rewiring.
struct Candidate<T> {
    node: usize,
    edge: DubinsPath<T>,
    bound: T,
}

/// RRT* tree over SE(2). Edges are Dubins paths; distance is Dubins length
/// and edge cost is energy.
pub struct RrtStar<'a, T> {
    ctx: CostContext<'a, T>,
    config: PlannerConfig<T>,
    goal: Se2State<T>,
    nodes: Vec<RrtNode<T>>,
    buckets: Buckets,
    rng: ChaCha8Rng,
    bounds: (T, T, T, T),
    gamma: T,
    /// Lower bound on energy per meter, used to skip hopeless candidates.
    min_rate: T,
    goal_nodes: Vec<usize>,
    best: Option<(usize, T)>,
    history: Vec<(usize, T)>,
    iteration: usize,
}

impl<'a, T: Real> RrtStar<'a, T> {
    pub fn new(ctx: CostContext<'a, T>, config: PlannerConfig<T>, start: Se2State<T>, goal: Se2State<T>) -> Self {
        let (x0, x1, y0, y1) = ctx.grid.node_bounds();
        let c = ctx.grid.cellsize();
        let bounds = (x0 + c, x1 - c, y0 + c, y1 - c);
        let area = (bounds.1 - bounds.0) * (bounds.3 - bounds.2);
        let measure = area * T::TAU();
        let unit_ball = T::lit(4.0 / 3.0) * T::PI();
        let third = T::one() / T::lit(3.0);
        let gamma = T::two() * (T::one() + third).powf(third) * (measure / unit_ball).powf(third);
        let min_rate = min_energy_rate(ctx.model, ctx.max_slope_deg);
        let f = |v: T| v.to_f64_lossy();
        let mut buckets = Buckets::new(f(bounds.0), f(bounds.1), f(bounds.2), f(bounds.3), f(config.steer_step));
        buckets.insert(f(start.x), f(start.y), 0);
        Self {
            ctx,
            config,
            goal,
            nodes: vec![RrtNode {
                state: start,
                parent: None,
                edge: None,
                edge_cost: T::zero(),
                cost: T::zero(),
                children: Vec::new(),
            }],
            buckets,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            bounds,
            gamma,
            min_rate,
            goal_nodes: Vec::new(),
            best: None,
            history: Vec::new(),
            iteration: 0,
        }
    }

    pub fn nodes(&self) -> &[RrtNode<T>] {
        &self.nodes
    }

    /// Best goal node and its cost.
    pub fn best(&self) -> Option<(usize, T)> {
        self.best
    }

    pub fn cost_history(&self) -> &[(usize, T)] {
        &self.history
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Shrinking-ball radius for `n` nodes, floored at twice the steering step.
    pub fn neighbor_radius(&self, n: usize) -> T {
        let floor = T::two() * self.config.steer_step;
        if n < 2 {
            return floor;
        }
        let n = T::lit(n as f64);
        let r = self.gamma * (n.ln() / n).powf(T::one() / T::lit(3.0));
        r.max(floor)
    }

    pub fn run(&mut self, iterations: usize) {
        self.run_with(iterations, |_| {});
    }

    /// Runs `iterations` more iterations, calling `after` once per iteration.
    pub fn run_with<F: FnMut(&Self)>(&mut self, iterations: usize, mut after: F) {
        for _ in 0..iterations {
            self.iteration += 1;
            self.step();
            after(self);
        }
    }

    fn sample(&mut self) -> Se2State<T> {
        if self.rng.gen::<f64>() < self.config.goal_bias.to_f64_lossy() {
            return self.goal;
        }
        let (x0, x1, y0, y1) = self.bounds;
        let f = |v: T| v.to_f64_lossy();
        let x = self.rng.gen_range(f(x0)..=f(x1));
        let y = self.rng.gen_range(f(y0)..=f(y1));
        let th = self.rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        Se2State::new(T::lit(x), T::lit(y), T::lit(th))
    }

    fn dubins(&self, a: Se2State<T>, b: Se2State<T>) -> Option<DubinsPath<T>> {
        dubins_shortest(a, b, self.config.turning_radius).ok()
    }

    /// Node with the shortest Dubins path to `target`.
    fn nearest(&self, target: Se2State<T>) -> Option<(usize, DubinsPath<T>)> {
        let (tx, ty) = (target.x.to_f64_lossy(), target.y.to_f64_lossy());
        let (ci, cj) = self.buckets.cell_of(tx, ty);
        let mut best: Option<(usize, DubinsPath<T>, f64)> = None;
        let mut ids = Vec::new();
        for k in 0..=self.buckets.max_ring() {
            if let Some((_, _, d)) = best {
                // Dubins length is at least the Euclidean distance
                if (k as f64 - 1.0) * self.buckets.cell > d {
                    break;
                }
            }
            ids.clear();
            self.buckets.ring(ci, cj, k, &mut ids);
            ids.sort_unstable();
            for &id in &ids {
                let Some(path) = self.dubins(self.nodes[id].state, target) else {
                    continue;
                };
                let d = path.length().to_f64_lossy();
                if best.as_ref().is_none_or(|b| d < b.2) {
                    best = Some((id, path, d));
                }
            }
        }
        best.map(|(id, p, _)| (id, p))
    }

    /// Node ids within Euclidean distance `r` of `(x, y)`, ascending.
    fn near(&self, x: T, y: T, r: T) -> Vec<usize> {
        let (fx, fy, fr) = (x.to_f64_lossy(), y.to_f64_lossy(), r.to_f64_lossy());
        let (ci, cj) = self.buckets.cell_of(fx, fy);
        let rings = (fr / self.buckets.cell).ceil() as usize + 1;
        let mut ids = Vec::new();
        for k in 0..=rings.min(self.buckets.max_ring()) {
            self.buckets.ring(ci, cj, k, &mut ids);
        }
        ids.retain(|&id| {
            let s = &self.nodes[id].state;
            (s.x.to_f64_lossy() - fx).hypot(s.y.to_f64_lossy() - fy) <= fr
        });
        ids.sort_unstable();
        ids
    }

    fn par_costs(&self, cands: &[Candidate<T>]) -> Vec<T> {
        cands.par_iter().map(|c| self.ctx.edge_cost(&c.edge)).collect()
    }

    fn step(&mut self) {
        let target = self.sample();
        let Some((nearest, path)) = self.nearest(target) else {
            return;
        };
        let path = if path.length() > self.config.steer_step {
            path.truncated(self.config.steer_step)
        } else {
            path
        };
        let new_state = path.end();
        if !self.ctx.grid.contains_with_margin(new_state.x, new_state.y) {
            return;
        }
        let n = self.nodes.len();
        let radius = self.neighbor_radius(n + 1);
        let near = self.near(new_state.x, new_state.y, radius);

        // choose parent
        let mut cands: Vec<Candidate<T>> = Vec::with_capacity(near.len() + 1);
        cands.push(Candidate {
            node: nearest,
            bound: self.nodes[nearest].cost + self.min_rate * path.length(),
            edge: path,
        });
        for &id in &near {
            if id == nearest {
                continue;
            }
            let Some(edge) = self.dubins(self.nodes[id].state, new_state) else {
                continue;
            };
            if edge.length() > radius {
                continue;
            }
            cands.push(Candidate {
                node: id,
                bound: self.nodes[id].cost + self.min_rate * edge.length(),
                edge,
            });
        }
        cands.sort_by(|a, b| a.bound.partial_cmp(&b.bound).unwrap().then(a.node.cmp(&b.node)));
        let parent_costs: Vec<T> = cands.iter().map(|c| self.nodes[c.node].cost).collect();
        let edge_costs = if self.config.concurrent {
            self.par_costs(&cands)
        } else {
            // candidates are sorted by bound, so the rest can only tie or lose
            let mut best = T::infinity();
            let mut out = Vec::with_capacity(cands.len());
            for (i, c) in cands.iter().enumerate() {
                if c.bound >= best {
                    out.push(T::infinity());
                    continue;
                }
                let e = self.ctx.edge_cost(&c.edge);
                best = best.min(parent_costs[i] + e);
                out.push(e);
            }
            out
        };
        let mut choice: Option<(usize, T)> = None;
        for (i, e) in edge_costs.iter().enumerate() {
            let total = parent_costs[i] + *e;
            if total.is_finite() && choice.is_none_or(|(_, c)| total < c) {
                choice = Some((i, total));
            }
        }
        let Some((ci, total)) = choice else {
            return;
        };
        let parent = cands[ci].node;
        let new_id = self.insert(parent, cands[ci].edge, edge_costs[ci], total);

        // rewire
        let mut rewires: Vec<Candidate<T>> = Vec::new();
        for &id in &near {
            if id == parent || id == 0 {
                continue;
            }
            let Some(edge) = self.dubins(new_state, self.nodes[id].state) else {
                continue;
            };
            if edge.length() > radius {
                continue;
            }
            rewires.push(Candidate {
                node: id,
                bound: total + self.min_rate * edge.length(),
                edge,
            });
        }
        let costs = if self.config.concurrent {
            self.par_costs(&rewires)
        } else {
            Vec::new()
        };
        for (i, cand) in rewires.iter().enumerate() {
            // earlier rewires may have lowered this node's cost
            let current = self.nodes[cand.node].cost;
            if cand.bound >= current {
                continue;
            }
            let e = if self.config.concurrent {
                costs[i]
            } else {
                self.ctx.edge_cost(&cand.edge)
            };
            if total + e < current {
                self.reparent(cand.node, new_id, cand.edge, e);
            }
        }

        self.connect_goal(new_id, radius);
        self.update_best();
    }

    fn insert(&mut self, parent: usize, edge: DubinsPath<T>, edge_cost: T, cost: T) -> usize {
        let id = self.nodes.len();
        let state = edge.end();
        self.nodes.push(RrtNode {
            state,
            parent: Some(parent),
            edge: Some(edge),
            edge_cost,
            cost,
            children: Vec::new(),
        });
        self.nodes[parent].children.push(id);
        self.buckets.insert(state.x.to_f64_lossy(), state.y.to_f64_lossy(), id);
        if self.reaches_goal(&state) {
            self.goal_nodes.push(id);
        }
        id
    }

    fn reaches_goal(&self, s: &Se2State<T>) -> bool {
        s.distance(&self.goal) <= self.config.goal_tolerance
            && s.heading_error(&self.goal) <= self.config.goal_heading_tolerance
    }

    fn reparent(&mut self, node: usize, parent: usize, edge: DubinsPath<T>, edge_cost: T) {
        if let Some(old) = self.nodes[node].parent {
            self.nodes[old].children.retain(|&c| c != node);
        }
        self.nodes[parent].children.push(node);
        let cost = self.nodes[parent].cost + edge_cost;
        let n = &mut self.nodes[node];
        n.parent = Some(parent);
        n.edge = Some(edge);
        n.edge_cost = edge_cost;
        n.cost = cost;
        let mut stack = self.nodes[node].children.clone();
        while let Some(c) = stack.pop() {
            let p = self.nodes[c].parent.expect("child has a parent");
            self.nodes[c].cost = self.nodes[p].cost + self.nodes[c].edge_cost;
            stack.extend_from_slice(&self.nodes[c].children);
        }
    }

    /// Tries an exact connection from `from` to the goal pose.
    fn connect_goal(&mut self, from: usize, radius: T) {
        let s = self.nodes[from].state;
        if self.reaches_goal(&s) || s.distance(&self.goal) > radius {
            return;
        }
        let Some(edge) = self.dubins(s, self.goal) else {
            return;
        };
        let base = self.nodes[from].cost;
        let best = self.best.map_or(T::infinity(), |b| b.1);
        if base + self.min_rate * edge.length() >= best {
            return;
        }
        let e = self.ctx.edge_cost(&edge);
        if base + e < best {
            self.insert(from, edge, e, base + e);
        }
    }

    fn update_best(&mut self) {
        let best = self.goal_nodes.iter().map(|&id| (id, self.nodes[id].cost)).fold(
            None,
            |acc: Option<(usize, T)>, (id, c)| match acc {
                Some((_, bc)) if bc <= c => acc,
                _ => Some((id, c)),
            },
        );
        if let Some((id, c)) = best {
            if self.best.is_none_or(|(_, bc)| c < bc) {
                self.history.push((self.iteration, c));
            }
            self.best = Some((id, c));
        }
    }

    /// Edges from the root to the best goal node.
    pub fn best_path(&self) -> Option<Vec<DubinsPath<T>>> {
        let (mut id, _) = self.best?;
        let mut edges = Vec::new();
        while let Some(p) = self.nodes[id].parent {
            edges.push(self.nodes[id].edge.expect("non-root node has an edge"));
            id = p;
        }
        edges.reverse();
        Some(edges)
    }

    /// Checks that node `id` stores its recomputed edge cost and that its
    /// cost is the parent cost plus that edge cost within `rel_tol`.
    pub fn node_consistent(&self, id: usize, rel_tol: T) -> bool {
        let n = &self.nodes[id];
        let (Some(p), Some(edge)) = (n.parent, n.edge) else {
            return n.cost == T::zero();
        };
        let e = self.ctx.edge_cost(&edge);
        let expected = self.nodes[p].cost + e;
        e == n.edge_cost
            && (n.cost - expected).abs() <= rel_tol * expected.abs().max(T::one())
            && self.nodes[p].children.contains(&id)
    }

    /// Index of the first inconsistent node, if any.
    pub fn first_inconsistent(&self, rel_tol: T) -> Option<usize> {
        (0..self.nodes.len()).find(|&i| !self.node_consistent(i, rel_tol))
    }
}

/// Smallest energy per meter over `[-cap, cap]` on a 0.1 deg grid, shaded
/// down by 1 %.
fn min_energy_rate<T: Real>(model: &EnergyModel<T>, cap: T) -> T {
    let steps = (cap * T::lit(10.0)).floor().to_i64().unwrap_or(0);
    let mut m = T::infinity();
    for k in -steps..=steps {
        if let Ok(e) = model.energy_per_meter(T::lit(k as f64 / 10.0)) {
            m = m.min(e);
        }
    }
    if m.is_finite() {
        m * T::lit(0.99)
    } else {
        T::zero()
    }
}
