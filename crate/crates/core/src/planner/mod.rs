//! Energy-aware RRT* over SE(2) with Dubins steering.
//!
//! Edge cost is the slope-dependent energy per meter integrated along the
//! edge by the midpoint rule. Edges that leave the map, touch NODATA or
//! exceed the heading-slope cap get an infinite sentinel cost.

mod report;
mod rrt;

use serde::{Deserialize, Serialize};

use crate::energy::{EnergyModel, VelocityModel};
use crate::geom::{dubins_shortest, DubinsPath, Se2State};
use crate::num::Real;
use crate::terrain::{CraterSpec, ElevationGrid};

pub use report::{MissionReport, ReportRow, PATH_CSV_HEADER};
pub use rrt::{RrtNode, RrtStar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("invalid planner config: {0}")]
    InvalidConfig(String),
    #[error("{which} pose ({x}, {y}, {theta}) is not traversable: {reason}")]
    InvalidEndpoint {
        which: &'static str,
        x: f64,
        y: f64,
        theta: f64,
        reason: String,
    },
    #[error("no feasible path after {iterations} iterations")]
    NoPath { iterations: usize },
    #[error("mission leg {leg}: {source}")]
    Leg {
        leg: usize,
        #[source]
        source: Box<PlanError>,
    },
    #[error("a mission needs at least two waypoints, got {0}")]
    TooFewWaypoints(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig<T> {
    /// Minimum turning radius [m].
    pub turning_radius: T,
    pub iterations: usize,
    /// Probability of sampling the goal pose.
    pub goal_bias: T,
    /// A tree node this close to the goal counts as reaching it [m].
    pub goal_tolerance: T,
    /// Heading tolerance for the same test [rad].
    pub goal_heading_tolerance: T,
    /// Maximum Dubins length of a new edge [m].
    pub steer_step: T,
    /// Edge sample spacing [m].
    pub sample_spacing: T,
    /// Largest traversable |heading slope| [deg].
    pub max_slope_deg: T,
    pub seed: u64,
    /// Evaluate candidate edges on the rayon pool.
    pub concurrent: bool,
}

impl<T: Real> Default for PlannerConfig<T> {
    fn default() -> Self {
        Self {
            turning_radius: T::lit(2.5),
            iterations: 5000,
            goal_bias: T::lit(0.05),
            goal_tolerance: T::lit(0.5),
            goal_heading_tolerance: T::lit(0.1),
            steer_step: T::lit(10.0),
            sample_spacing: T::half(),
            max_slope_deg: T::lit(25.0),
            seed: 0,
            concurrent: false,
        }
    }
}

impl<T: Real> PlannerConfig<T> {
    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: &str| Err(PlanError::InvalidConfig(m.to_string()));
        let pos = |v: T| v.is_finite() && v > T::zero();
        if !pos(self.turning_radius) {
            return bad("turning_radius must be positive");
        }
        if !pos(self.sample_spacing) {
            return bad("sample_spacing must be positive");
        }
        if !pos(self.steer_step) {
            return bad("steer_step must be positive");
        }
        if !(self.goal_bias >= T::zero() && self.goal_bias < T::one()) {
            return bad("goal_bias must lie in [0, 1)");
        }
        if !(self.goal_tolerance >= T::zero() && self.goal_heading_tolerance >= T::zero()) {
            return bad("goal tolerances must be non-negative");
        }
        let (_, hi) = EnergyModel::<T>::domain();
        if !(self.max_slope_deg > T::zero() && self.max_slope_deg <= hi) {
            return bad("max_slope_deg must lie in (0, 25]");
        }
        if self.iterations == 0 {
            return bad("iterations must be positive");
        }
        Ok(())
    }
}

/// Everything an edge-cost query needs.
#[derive(Debug, Clone, Copy)]
pub struct CostContext<'a, T> {
    pub grid: &'a ElevationGrid<T>,
    pub model: &'a EnergyModel<T>,
    pub spacing: T,
    pub max_slope_deg: T,
}

impl<'a, T: Real> CostContext<'a, T> {
    pub fn new(grid: &'a ElevationGrid<T>, model: &'a EnergyModel<T>, config: &PlannerConfig<T>) -> Self {
        Self {
            grid,
            model,
            spacing: config.sample_spacing,
            max_slope_deg: config.max_slope_deg,
        }
    }

    /// Energy per meter at one pose, `None` where the pose is not traversable.
    pub fn energy_at(&self, state: &Se2State<T>) -> Option<(T, T)> {
        let slope = self.grid.heading_slope(state).ok()?;
        if !(slope.abs() <= self.max_slope_deg) {
            return None;
        }
        let e = self.model.energy_per_meter(slope).ok()?;
        Some((slope, e))
    }

    /// Walks the midpoint samples of `edge`, stopping at the first
    /// infeasible one. `visit(state, s, piece, slope, e)`.
    fn integrate<F>(&self, edge: &DubinsPath<T>, mut visit: F) -> Option<T>
    where
        F: FnMut(Se2State<T>, T, T, T, T),
    {
        let len = edge.length();
        if len <= T::zero() {
            return Some(T::zero());
        }
        let n = (len / self.spacing).ceil().max(T::one());
        let piece = len / n;
        let count = n.to_usize().unwrap_or(1);
        let mut total = T::zero();
        for k in 0..count {
            let s = piece * (T::lit(k as f64) + T::half());
            let state = edge.sample(s).ok()?;
            let (slope, e) = self.energy_at(&state)?;
            visit(state, s, piece, slope, e);
            total += e * piece;
        }
        Some(total)
    }

    /// Energy [J] of an edge, `+inf` when any sample is infeasible.
    pub fn edge_cost(&self, edge: &DubinsPath<T>) -> T {
        self.integrate(edge, |_, _, _, _, _| {}).unwrap_or(T::infinity())
    }
}

/// Energy [J] to traverse `edge`: midpoint samples at most `spacing` apart,
/// `+inf` when a sample leaves the map, touches NODATA or has
/// `|heading slope| > max_slope_deg`.
pub fn edge_cost<T: Real>(
    grid: &ElevationGrid<T>,
    model: &EnergyModel<T>,
    edge: &DubinsPath<T>,
    spacing: T,
    max_slope_deg: T,
) -> T {
    CostContext {
        grid,
        model,
        spacing,
        max_slope_deg,
    }
    .edge_cost(edge)
}

/// One midpoint sample of the final path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSample<T> {
    pub state: Se2State<T>,
    /// Arclength from the mission start [m].
    pub s: T,
    /// Length represented by this sample [m].
    pub ds: T,
    pub heading_slope_deg: T,
    pub energy_per_meter: T,
    /// Energy up to and including this sample [J].
    pub cumulative_energy: T,
    /// Index into [`PlanResult::segments`].
    pub segment: usize,
}

/// Per-leg totals of a plan or mission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegStats<T> {
    pub distance: T,
    pub energy: T,
    pub time: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult<T> {
    pub samples: Vec<PathSample<T>>,
    /// Dubins edges from start to goal, in order.
    pub segments: Vec<DubinsPath<T>>,
    /// Total locomotion energy [J].
    pub energy: T,
    /// Path length [m].
    pub distance: T,
    /// Walking time from the slope-dependent speed [s].
    pub time: T,
    pub iterations: usize,
    pub seed: u64,
    pub tree_size: usize,
    /// Per leg, `(iteration, best cost)` each time the best goal cost improved.
    pub cost_history: Vec<Vec<(usize, T)>>,
    pub legs: Vec<LegStats<T>>,
}

/// Path length per heading-slope bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeHistogram<T> {
    pub lower_deg: T,
    pub bin_width_deg: T,
    /// Length [m] with slope in `[lower + i w, lower + (i + 1) w)`; the last
    /// bin is closed.
    pub lengths: Vec<T>,
}

impl<T: Real> PlanResult<T> {
    fn empty(seed: u64) -> Self {
        Self {
            samples: Vec::new(),
            segments: Vec::new(),
            energy: T::zero(),
            distance: T::zero(),
            time: T::zero(),
            iterations: 0,
            seed,
            tree_size: 0,
            cost_history: Vec::new(),
            legs: Vec::new(),
        }
    }

    /// Path length with `|heading slope| > threshold_deg`.
    pub fn length_above(&self, threshold_deg: T) -> T {
        self.samples
            .iter()
            .filter(|s| s.heading_slope_deg.abs() > threshold_deg)
            .fold(T::zero(), |acc, s| acc + s.ds)
    }

    pub fn max_abs_slope(&self) -> T {
        self.samples
            .iter()
            .map(|s| s.heading_slope_deg.abs())
            .fold(T::zero(), T::max)
    }

    /// Histogram over `[-limit, limit]` with bins of `width`.
    pub fn slope_histogram(&self, limit_deg: T, width_deg: T) -> SlopeHistogram<T> {
        let bins = (T::two() * limit_deg / width_deg).ceil().to_usize().unwrap_or(1).max(1);
        let mut lengths = vec![T::zero(); bins];
        for s in &self.samples {
            let idx = ((s.heading_slope_deg + limit_deg) / width_deg).floor();
            let i = idx.max(T::zero()).to_usize().unwrap_or(0).min(bins - 1);
            lengths[i] += s.ds;
        }
        SlopeHistogram {
            lower_deg: -limit_deg,
            bin_width_deg: width_deg,
            lengths,
        }
    }

    /// Appends the samples of `edges`, continuing arclength and energy.
    fn extend_path(&mut self, ctx: &CostContext<'_, T>, velocity: &VelocityModel<T>, edges: &[DubinsPath<T>]) {
        let mut leg = LegStats {
            distance: T::zero(),
            energy: T::zero(),
            time: T::zero(),
        };
        for edge in edges {
            let seg = self.segments.len();
            let s0 = self.distance + leg.distance;
            let mut energy = self.energy + leg.energy;
            let mut time = T::zero();
            let samples = &mut self.samples;
            let cost = ctx.integrate(edge, |state, s, ds, slope, e| {
                energy += e * ds;
                time += ds / velocity.velocity(slope);
                samples.push(PathSample {
                    state,
                    s: s0 + s,
                    ds,
                    heading_slope_deg: slope,
                    energy_per_meter: e,
                    cumulative_energy: energy,
                    segment: seg,
                });
            });
            debug_assert!(cost.is_some(), "final path edges are feasible");
            leg.distance += edge.length();
            leg.energy += cost.unwrap_or(T::infinity());
            leg.time += time;
            self.segments.push(*edge);
        }
        self.distance += leg.distance;
        self.energy += leg.energy;
        self.time += leg.time;
        self.legs.push(leg);
    }
}

fn check_endpoint<T: Real>(ctx: &CostContext<'_, T>, which: &'static str, s: &Se2State<T>) -> Result<(), PlanError> {
    let fail = |reason: String| PlanError::InvalidEndpoint {
        which,
        x: s.x.to_f64_lossy(),
        y: s.y.to_f64_lossy(),
        theta: s.theta.to_f64_lossy(),
        reason,
    };
    if !ctx.grid.contains_with_margin(s.x, s.y) {
        return Err(fail("outside the map".into()));
    }
    let slope = ctx.grid.heading_slope(s).map_err(|e| fail(e.to_string()))?;
    if !(slope.abs() <= ctx.max_slope_deg) {
        return Err(fail(format!("heading slope {slope:.2} deg exceeds the cap")));
    }
    Ok(())
}

/// Best path from `start` to `goal` after `config.iterations` samples.
pub fn plan<T: Real>(
    grid: &ElevationGrid<T>,
    model: &EnergyModel<T>,
    config: &PlannerConfig<T>,
    start: Se2State<T>,
    goal: Se2State<T>,
) -> Result<PlanResult<T>, PlanError> {
    config.validate()?;
    let ctx = CostContext::new(grid, model, config);
    check_endpoint(&ctx, "start", &start)?;
    check_endpoint(&ctx, "goal", &goal)?;
    let velocity = VelocityModel::new(model.foot);
    let mut result = PlanResult::empty(config.seed);

    if start.distance(&goal) <= T::epsilon() && start.heading_error(&goal) <= T::epsilon() {
        result.extend_path(&ctx, &velocity, &[]);
        result.cost_history.push(Vec::new());
        return Ok(result);
    }

    let mut tree = RrtStar::new(ctx, *config, start, goal);
    tree.run(config.iterations);
    let edges = tree.best_path().ok_or(PlanError::NoPath {
        iterations: config.iterations,
    })?;
    result.iterations = config.iterations;
    result.tree_size = tree.nodes().len();
    result.cost_history = vec![tree.cost_history().to_vec()];
    result.extend_path(&ctx, &velocity, &edges);
    Ok(result)
}

/// Plans each consecutive waypoint pair independently (seed offset by the
/// leg index) and concatenates the legs.
pub fn plan_mission<T: Real>(
    grid: &ElevationGrid<T>,
    model: &EnergyModel<T>,
    config: &PlannerConfig<T>,
    waypoints: &[Se2State<T>],
) -> Result<PlanResult<T>, PlanError> {
    if waypoints.len() < 2 {
        return Err(PlanError::TooFewWaypoints(waypoints.len()));
    }
    config.validate()?;
    let ctx = CostContext::new(grid, model, config);
    let velocity = VelocityModel::new(model.foot);
    let mut out = PlanResult::empty(config.seed);
    for (leg, pair) in waypoints.windows(2).enumerate() {
        let leg_config = PlannerConfig {
            seed: config.seed.wrapping_add(leg as u64),
            ..*config
        };
        let wrap = |e| PlanError::Leg {
            leg,
            source: Box::new(e),
        };
        let part = plan(grid, model, &leg_config, pair[0], pair[1]).map_err(wrap)?;
        out.iterations += part.iterations;
        out.tree_size += part.tree_size;
        out.extend_path(&ctx, &velocity, &part.segments);
        out.cost_history.extend(part.cost_history);
    }
    Ok(out)
}

/// Head-on straight traverse from `from` to `to`: the Dubins path between
/// the two positions with both headings along the connecting line.
pub fn straight_edge<T: Real>(from: (T, T), to: (T, T)) -> DubinsPath<T> {
    let theta = (to.1 - from.1).atan2(to.0 - from.0);
    let a = Se2State::new(from.0, from.1, theta);
    let b = Se2State::new(to.0, to.1, theta);
    dubins_shortest(a, b, T::one()).expect("unit radius is valid")
}

/// Descent-ascent mission through a crater: from the south shoulder at
/// radius `r` (heading along the contour) to the floor center, then out to
/// the east shoulder at the same radius (again along the contour).
pub fn crater_waypoints<T: Real>(shape: &CraterSpec<T>, r: T) -> [Se2State<T>; 3] {
    let (cx, cy) = (shape.center_x, shape.center_y);
    let north = T::FRAC_PI_2();
    [
        Se2State::new(cx, cy - r, T::zero()),
        Se2State::new(cx, cy, north),
        Se2State::new(cx + r, cy, north),
    ]
}

/// Cost and length of the head-on polyline through `waypoints`, or `None`
/// if any straight leg is infeasible.
pub fn straight_mission_cost<T: Real>(ctx: &CostContext<'_, T>, waypoints: &[Se2State<T>]) -> Option<(T, T)> {
    let mut cost = T::zero();
    let mut length = T::zero();
    for w in waypoints.windows(2) {
        let edge = straight_edge((w[0].x, w[0].y), (w[1].x, w[1].y));
        let c = ctx.edge_cost(&edge);
        if !c.is_finite() {
            return None;
        }
        cost += c;
        length += edge.length();
    }
    Some((cost, length))
}
