use proptest::prelude::*;
use slopewalk::energy::{EnergyModel, PowerAccounting};
use slopewalk::geom::{dubins_shortest, DubinsPath, Se2State};
use slopewalk::planner::{
    crater_waypoints, edge_cost, plan, plan_mission, straight_edge, straight_mission_cost, CostContext, LegStats,
    MissionReport, PlanError, PlanResult, PlannerConfig, ReportRow, RrtStar, PATH_CSV_HEADER,
};
use slopewalk::terrain::{gen_crater, CraterSpec, ElevationGrid};

const CRATER_RADIUS: f64 = 120.0;

fn flat(size: usize) -> ElevationGrid<f64> {
    ElevationGrid::from_fn(size, size, 1.0, 0.0, 0.0, |_, _| 0.0).unwrap()
}

fn tilted(size: usize, deg: f64) -> ElevationGrid<f64> {
    let k = deg.to_radians().tan();
    ElevationGrid::from_fn(size, size, 1.0, 0.0, 0.0, |_, y| k * y).unwrap()
}

fn crater() -> (CraterSpec<f64>, ElevationGrid<f64>) {
    let shape = CraterSpec::default();
    let grid = gen_crater(&shape).unwrap();
    (shape, grid)
}

fn config(iterations: usize, seed: u64) -> PlannerConfig<f64> {
    PlannerConfig {
        iterations,
        seed,
        ..Default::default()
    }
}

fn straight(x0: f64, y0: f64, x1: f64, y1: f64) -> DubinsPath<f64> {
    straight_edge((x0, y0), (x1, y1))
}

#[test]
fn flat_straight_edge_costs_825_per_meter() {
    let e = edge_cost(
        &flat(50),
        &EnergyModel::point(),
        &straight(10.0, 20.0, 20.0, 20.0),
        0.5,
        25.0,
    );
    assert!((e - 8250.0).abs() <= 1e-9 * 8250.0, "{e}");
}

#[test]
fn edge_over_a_steep_strip_is_infeasible() {
    let ramp = |deg: f64| {
        let k = deg.to_radians().tan();
        ElevationGrid::from_fn(100, 40, 1.0, 0.0, 0.0, move |x: f64, _| {
            k * (x.clamp(40.0, 50.0) - 40.0)
        })
        .unwrap()
    };
    let edge = straight(20.0, 20.0, 70.0, 20.0);
    let m = EnergyModel::point();
    assert_eq!(edge_cost(&ramp(26.0), &m, &edge, 0.5, 25.0), f64::INFINITY);
    assert!(edge_cost(&ramp(20.0), &m, &edge, 0.5, 25.0).is_finite());
    // heading along the strip sees no slope
    let along = straight(45.0, 5.0, 45.0, 35.0);
    let e = edge_cost(&ramp(26.0), &m, &along, 0.5, 25.0);
    assert!((e - 825.0 * 30.0).abs() < 1e-6);
}

#[test]
fn edge_leaving_the_map_is_infeasible() {
    let e = edge_cost(
        &flat(30),
        &EnergyModel::planar(),
        &straight(10.0, 10.0, 40.0, 10.0),
        0.5,
        25.0,
    );
    assert_eq!(e, f64::INFINITY);
}

#[test]
fn contour_edge_costs_level_ground_energy() {
    let grid = tilted(80, 25.0);
    for model in [EnergyModel::point(), EnergyModel::planar()] {
        let e = edge_cost(&grid, &model, &straight(10.0, 40.0, 60.0, 40.0), 0.5, 25.0);
        let flat_rate = model.energy_per_meter(0.0).unwrap();
        assert!((e - flat_rate * 50.0).abs() <= 1e-9 * e, "{e}");
    }
}

#[test]
fn curved_edge_matches_fine_quadrature() {
    let grid = tilted(80, 20.0);
    let model = EnergyModel::planar();
    let edge = dubins_shortest(Se2State::new(20.0, 30.0, 0.3), Se2State::new(40.0, 45.0, 2.0), 2.5).unwrap();
    let coarse = edge_cost(&grid, &model, &edge, 0.5, 25.0);
    // independent integration with the analytic plane slope
    let k = 20f64.to_radians().tan();
    let n = 200_000;
    let h = edge.length() / n as f64;
    let fine: f64 = (0..n)
        .map(|i| {
            let s = edge.sample((i as f64 + 0.5) * h).unwrap();
            let slope = (k * s.theta.sin()).atan().to_degrees();
            model.energy_per_meter(slope).unwrap() * h
        })
        .sum();
    assert!((coarse - fine).abs() <= 1e-3 * fine, "{coarse} vs {fine}");
}

#[test]
fn flat_plan_is_nearly_straight() {
    let model = EnergyModel::point();
    let r = plan(
        &flat(100),
        &model,
        &config(3000, 4),
        Se2State::new(10.0, 50.0, 0.0),
        Se2State::new(90.0, 50.0, 0.0),
    )
    .unwrap();
    assert!((r.distance - 80.0).abs() <= 0.8, "length {}", r.distance);
    assert!((r.energy - 825.0 * r.distance).abs() <= 0.01 * r.energy);
    let end = r.segments.last().unwrap().end();
    assert!(end.distance(&Se2State::new(90.0, 50.0, 0.0)) <= 0.5);
}

#[test]
fn turn_around_respects_the_dubins_bound() {
    let start = Se2State::new(50.0, 50.0, 0.0);
    let goal = Se2State::new(46.0, 50.0, std::f64::consts::PI);
    let r = plan(&flat(100), &EnergyModel::point(), &config(1500, 2), start, goal).unwrap();
    let bound = dubins_shortest(start, goal, 2.5).unwrap().length();
    assert!(r.distance >= bound - 1e-9, "{} < {bound}", r.distance);
}

#[test]
fn identical_waypoints_give_an_empty_mission() {
    let p = Se2State::new(30.0, 30.0, 1.0);
    let r = plan_mission(&flat(60), &EnergyModel::point(), &config(100, 0), &[p, p]).unwrap();
    assert_eq!(r.distance, 0.0);
    assert_eq!(r.energy, 0.0);
    assert!(r.samples.is_empty());
    assert_eq!(r.legs.len(), 1);
}

#[test]
fn bad_inputs_are_reported() {
    let grid = flat(60);
    let m = EnergyModel::point();
    let a = Se2State::new(10.0, 10.0, 0.0);
    let b = Se2State::new(40.0, 40.0, 0.0);
    let mut c = config(100, 0);
    c.turning_radius = 0.0;
    assert!(matches!(plan(&grid, &m, &c, a, b), Err(PlanError::InvalidConfig(_))));
    let mut c = config(100, 0);
    c.max_slope_deg = 30.0;
    assert!(matches!(plan(&grid, &m, &c, a, b), Err(PlanError::InvalidConfig(_))));
    let outside = Se2State::new(100.0, 10.0, 0.0);
    assert!(matches!(
        plan(&grid, &m, &config(100, 0), a, outside),
        Err(PlanError::InvalidEndpoint { which: "goal", .. })
    ));
    assert!(matches!(
        plan_mission(&grid, &m, &config(100, 0), &[a]),
        Err(PlanError::TooFewWaypoints(1))
    ));
    let err = plan_mission(&grid, &m, &config(300, 0), &[a, b, outside]).unwrap_err();
    assert!(matches!(err, PlanError::Leg { leg: 1, .. }), "{err}");
}

#[test]
fn steep_goal_is_rejected() {
    let grid = tilted(60, 30.0);
    let a = Se2State::new(10.0, 30.0, 0.0);
    let up = Se2State::new(40.0, 30.0, std::f64::consts::FRAC_PI_2);
    let err = plan(&grid, &EnergyModel::point(), &config(100, 0), a, up).unwrap_err();
    assert!(matches!(err, PlanError::InvalidEndpoint { which: "goal", .. }));
}

fn check_path(grid: &ElevationGrid<f64>, model: &EnergyModel<f64>, r: &PlanResult<f64>) {
    let mut sum = 0.0;
    let mut starts = vec![0.0];
    for seg in &r.segments {
        starts.push(starts.last().unwrap() + seg.length());
    }
    for s in &r.samples {
        sum += model.energy_per_meter(s.heading_slope_deg).unwrap() * s.ds;
        assert!(s.heading_slope_deg.abs() <= 25.0);
        assert!(grid.contains_with_margin(s.state.x, s.state.y));
        let on_seg = r.segments[s.segment].sample(s.s - starts[s.segment]).unwrap();
        assert!(on_seg.distance(&s.state) < 1e-6);
        assert!((grid.heading_slope(&s.state).unwrap() - s.heading_slope_deg).abs() < 1e-12);
    }
    assert!((sum - r.energy).abs() <= 1e-6 * r.energy);
    let last = r.samples.last().unwrap();
    assert!((last.cumulative_energy - r.energy).abs() <= 1e-6 * r.energy);
    assert!((starts.last().unwrap() - r.distance).abs() < 1e-9);
    for w in r.segments.windows(2) {
        assert!(w[0].end().distance(&w[1].start()) < 1e-6);
    }
}

#[test]
fn crater_mission_is_consistent_and_additive() {
    let (shape, grid) = crater();
    let model = EnergyModel::planar();
    let wp = crater_waypoints(&shape, CRATER_RADIUS);
    let r = plan_mission(&grid, &model, &config(3000, 5), &wp).unwrap();
    check_path(&grid, &model, &r);
    assert_eq!(r.legs.len(), 2);
    assert_eq!(r.energy, r.legs[0].energy + r.legs[1].energy);
    assert_eq!(r.distance, r.legs[0].distance + r.legs[1].distance);
    assert_eq!(r.time, r.legs[0].time + r.legs[1].time);
    // each leg equals the corresponding single plan
    let leg1 = plan(&grid, &model, &config(3000, 6), wp[1], wp[2]).unwrap();
    assert_eq!(leg1.energy, r.legs[1].energy);
    let hist = r.slope_histogram(25.0, 5.0);
    assert_eq!(hist.lengths.len(), 10);
    assert!((hist.lengths.iter().sum::<f64>() - r.distance).abs() < 1e-6);
}

#[test]
fn plans_are_deterministic_per_seed() {
    let (shape, grid) = crater();
    let model = EnergyModel::planar();
    let wp = crater_waypoints(&shape, CRATER_RADIUS);
    let a = plan(&grid, &model, &config(1500, 9), wp[1], wp[2]).unwrap();
    let b = plan(&grid, &model, &config(1500, 9), wp[1], wp[2]).unwrap();
    assert_eq!(a, b);
    let c = plan(&grid, &model, &config(1500, 10), wp[1], wp[2]).unwrap();
    assert_ne!(a.samples, c.samples);
}

#[test]
fn concurrent_mode_finds_the_same_cost() {
    let (shape, grid) = crater();
    let model = EnergyModel::planar();
    let wp = crater_waypoints(&shape, CRATER_RADIUS);
    let seq = plan(&grid, &model, &config(1500, 3), wp[0], wp[1]).unwrap();
    let mut cfg = config(1500, 3);
    cfg.concurrent = true;
    let par = plan(&grid, &model, &cfg, wp[0], wp[1]).unwrap();
    assert_eq!(seq.energy, par.energy);
}

#[test]
fn tree_stays_consistent_and_best_cost_never_increases() {
    let (shape, grid) = crater();
    let model = EnergyModel::planar();
    let cfg = config(4000, 12);
    let wp = crater_waypoints(&shape, CRATER_RADIUS);
    let ctx = CostContext::new(&grid, &model, &cfg);
    let mut tree = RrtStar::new(ctx, cfg, wp[0], wp[1]);
    let mut last_best = f64::INFINITY;
    let mut spot_checks = 0;
    tree.run_with(cfg.iterations, |t| {
        if let Some((_, c)) = t.best() {
            assert!(c <= last_best, "best cost rose at iteration {}", t.iteration());
            last_best = c;
        }
        if t.iteration() % 100 == 0 {
            let n = t.nodes().len();
            for id in [n - 1, (t.iteration() * 7919) % n] {
                assert!(t.node_consistent(id, 1e-9), "node {id} at iteration {}", t.iteration());
            }
            spot_checks += 1;
        }
    });
    assert_eq!(spot_checks, 40);
    assert_eq!(tree.first_inconsistent(1e-9), None);
    assert!(last_best.is_finite());
    let history = tree.cost_history();
    assert!(history.windows(2).all(|w| w[1].1 < w[0].1 && w[1].0 > w[0].0));
}

#[test]
fn halving_sample_spacing_changes_crater_cost_below_one_percent() {
    let (shape, grid) = crater();
    let model = EnergyModel::planar();
    let wp = crater_waypoints(&shape, CRATER_RADIUS);
    let r = plan_mission(&grid, &model, &config(3000, 1), &wp).unwrap();
    let total = |ds: f64| -> f64 { r.segments.iter().map(|e| edge_cost(&grid, &model, e, ds, 25.0)).sum() };
    let (a, b) = (total(0.5), total(0.25));
    assert!((a - r.energy).abs() <= 1e-9 * a);
    assert!((a - b).abs() <= 0.01 * b, "{a} vs {b}");
    // same check on the straight oracle
    let ctx = |ds| CostContext {
        grid: &grid,
        model: &model,
        spacing: ds,
        max_slope_deg: 25.0,
    };
    let s1 = straight_mission_cost(&ctx(0.5), &wp).unwrap().0;
    let s2 = straight_mission_cost(&ctx(0.25), &wp).unwrap().0;
    assert!((s1 - s2).abs() <= 0.01 * s2);
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    0.5 * (v[(n - 1) / 2] + v[n / 2])
}

#[test]
fn more_iterations_do_not_worsen_the_median_cost() {
    let (shape, grid) = crater();
    let model = EnergyModel::planar();
    let wp = crater_waypoints(&shape, CRATER_RADIUS);
    let costs = |iters: usize| -> Vec<f64> {
        (0..10)
            .map(|seed| plan(&grid, &model, &config(iters, seed), wp[1], wp[2]).unwrap().energy)
            .collect()
    };
    let short = median(costs(2_000));
    let long = median(costs(20_000));
    assert!(long <= short, "{long} > {short}");
}

#[test]
fn report_rows_follow_the_mission_table() {
    let acct = PowerAccounting::default();
    // ascent, point foot column of the published table
    let leg = LegStats {
        distance: 366.0,
        energy: 340e3,
        time: 1299.0,
    };
    let row = ReportRow::new(&leg, &acct);
    assert_eq!(row.energy_kj.round(), 340.0);
    assert_eq!(row.energy_mars_kj.round(), 113.0);
    assert_eq!(row.power_w.round(), 262.0);
    assert_eq!(row.power_mars_w.round(), 87.0);
    assert_eq!(row.norm_energy_j_per_m.round(), 929.0);
    assert_eq!(row.norm_energy_mars_j_per_m.round(), 310.0);
    assert_eq!((row.velocity_m_per_s * 100.0).round(), 28.0);
    assert!((row.power_incl_standby_w - row.power_w - 100.0).abs() < 1e-9);
    let idle = ReportRow::new(
        &LegStats {
            distance: 0.0,
            energy: 0.0,
            time: 0.0,
        },
        &acct,
    );
    assert_eq!(idle.power_w, 0.0);
    assert_eq!(idle.velocity_m_per_s, 0.0);
}

#[test]
fn mission_outputs_have_units_and_totals() {
    let (shape, grid) = crater();
    let model = EnergyModel::planar();
    let wp = crater_waypoints(&shape, CRATER_RADIUS);
    let r = plan_mission(&grid, &model, &config(1000, 2), &wp).unwrap();
    let report = MissionReport::new(&r, "planar", &PowerAccounting::default());
    assert_eq!(report.legs.len(), 2);
    let sum: f64 = report.legs.iter().map(|l| l.energy_kj).sum();
    assert!((sum - report.total.energy_kj).abs() < 1e-9);
    assert!((report.total.energy_mars_kj * 3.0 - report.total.energy_kj).abs() < 1e-9);
    let json = serde_json::to_value(&report).unwrap();
    for key in [
        "distance_m",
        "energy_kJ",
        "energy_mars_kJ",
        "time_s",
        "power_W",
        "norm_energy_J_per_m",
        "velocity_m_per_s",
    ] {
        assert!(json["total"].get(key).is_some(), "{key}");
    }
    let table = report.to_table(true);
    assert!(table.contains("Norm. Energy") && table.contains("kJ ("));

    let mut csv = Vec::new();
    r.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().next(), Some(PATH_CSV_HEADER));
    assert_eq!(text.lines().count(), r.samples.len() + 1);
    let geo = r.to_geojson();
    assert_eq!(geo["geometry"]["type"], "LineString");
    assert_eq!(
        geo["geometry"]["coordinates"].as_array().unwrap().len(),
        r.samples.len()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn straight_edges_on_a_plane_cost_rate_times_length(
        gamma in 0.0f64..20.0,
        heading in -3.1f64..3.1,
        len in 1.0f64..30.0,
    ) {
        let grid = tilted(80, gamma);
        let (x0, y0) = (40.0, 40.0);
        let edge = straight(x0, y0, x0 + len * heading.cos(), y0 + len * heading.sin());
        let model = EnergyModel::planar();
        let slope = (gamma.to_radians().tan() * heading.sin()).atan().to_degrees();
        let expected = model.energy_per_meter(slope).unwrap() * edge.length();
        let e = edge_cost(&grid, &model, &edge, 0.5, 25.0);
        prop_assert!((e - expected).abs() <= 1e-6 * expected, "{} vs {}", e, expected);
        prop_assert!(e >= 0.0);
    }
}
