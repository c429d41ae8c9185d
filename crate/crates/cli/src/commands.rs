use std::path::{Path, PathBuf};

use anyhow::Context;
use serde_json::{json, Value};
use slopewalk::control::RobotModel;
use slopewalk::energy::{aoa_objective, optimal_aoa, AoaConvention, EnergyModel, FootType, PowerAccounting};
use slopewalk::gait::GaitSchedule;
use slopewalk::geom::Se2State;
use slopewalk::planner::{crater_waypoints, plan_mission, MissionReport, PlanError, PlannerConfig};
use slopewalk::sim::{run_walk, SimError};
use slopewalk::terrain::{gen_crater, load_esri_ascii, write_esri_ascii, ElevationGrid};

use crate::config::{self, FileConfig};
use crate::manifest::RunManifest;
use crate::{
    AoaArgs, Cli, Command, Convention, EnergyArgs, Foot, GaitName, GenCraterArgs, PlanArgs, SimulateArgs, UsageError,
};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let loaded = config::load(cli.config.as_deref())?;
    let cfg = loaded.config;
    let config_path = loaded.path;
    match cli.command {
        Command::GenCrater(a) => gen_crater_cmd(&cfg, config_path.as_deref(), a),
        Command::Energy(a) => energy_cmd(a),
        Command::Aoa(a) => aoa_cmd(a),
        Command::Plan(a) => plan_cmd(&cfg, config_path.as_deref(), a),
        Command::Simulate(a) => simulate_cmd(&cfg, config_path.as_deref(), a),
    }
}

fn foot_type(f: Foot) -> FootType {
    match f {
        Foot::Point => FootType::Point,
        Foot::Planar => FootType::Planar,
    }
}

fn with_config_input(m: &mut RunManifest, path: Option<&Path>) -> anyhow::Result<()> {
    if let Some(p) = path {
        m.input(p)?;
    }
    Ok(())
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn gen_crater_cmd(cfg: &FileConfig, config_path: Option<&Path>, a: GenCraterArgs) -> anyhow::Result<()> {
    let mut shape = cfg.crater;
    let set = |dst: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *dst = v;
        }
    };
    set(&mut shape.diameter, a.diameter);
    set(&mut shape.depth, a.depth);
    set(&mut shape.rim_height, a.rim);
    set(&mut shape.map_size, a.size);
    set(&mut shape.cellsize, a.cellsize);
    if a.size.is_some() {
        shape.center_x = shape.map_size / 2.0;
        shape.center_y = shape.map_size / 2.0;
    }
    shape.validate().map_err(|e| usage(e.to_string()))?;
    let grid = gen_crater(&shape)?;
    let mut m = RunManifest::new("gen-crater", None, serde_json::to_value(shape)?);
    with_config_input(&mut m, config_path)?;
    m.write_output(&a.out, write_esri_ascii(&grid).as_bytes())?;
    m.save(&PathBuf::from(format!("{}.manifest.json", a.out.display())))?;
    eprintln!(
        "wrote {} ({}x{} cells, floor {:.2} m)",
        a.out.display(),
        grid.ncols(),
        grid.nrows(),
        grid.heights().iter().copied().fold(f64::INFINITY, f64::min)
    );
    Ok(())
}

fn energy_table() -> String {
    let point = EnergyModel::<f64>::point();
    let planar = EnergyModel::<f64>::planar();
    let mut out = String::from("slope_deg,point_J_per_m,planar_J_per_m\n");
    for k in 0..=100 {
        let s = -25.0 + 0.5 * f64::from(k);
        let p = point.energy_per_meter(s).expect("in domain");
        let q = planar.energy_per_meter(s).expect("in domain");
        out.push_str(&format!("{s:.1},{p:.4},{q:.4}\n"));
    }
    out
}

fn energy_cmd(a: EnergyArgs) -> anyhow::Result<()> {
    let table = energy_table();
    match a.out {
        Some(path) => {
            let mut m = RunManifest::new("energy", None, json!({ "step_deg": 0.5, "range_deg": [-25.0, 25.0] }));
            m.write_output(&path, table.as_bytes())?;
            m.save(&PathBuf::from(format!("{}.manifest.json", path.display())))?;
        }
        None => print!("{table}"),
    }
    Ok(())
}

fn aoa_cmd(a: AoaArgs) -> anyhow::Result<()> {
    if !(a.gamma >= 0.0 && a.gamma <= 25.0) {
        return Err(usage(format!("--gamma must lie in [0, 25] deg, got {}", a.gamma)));
    }
    let model = EnergyModel::new(foot_type(a.foot));
    let conv = match a.convention {
        Convention::Surface => AoaConvention::Surface,
        Convention::Projected => AoaConvention::Projected,
    };
    let best = optimal_aoa(&model, a.gamma, conv)?;
    let curve: Vec<Value> = (0..180)
        .map(|k| {
            let aoa = 0.5 * f64::from(k);
            let obj = aoa_objective(&model, a.gamma, aoa, conv).expect("in domain");
            json!({ "aoa_deg": aoa, "objective_J_per_m": obj })
        })
        .collect();
    let out = json!({
        "foot": model.foot.to_string(),
        "gamma_deg": a.gamma,
        "convention": conv,
        "optimal_aoa_deg": best.aoa_deg,
        "objective_J_per_m": best.objective,
        "objective_curve": curve,
    });
    let text = serde_json::to_string_pretty(&out)? + "\n";
    match a.out {
        Some(path) => {
            let mut m = RunManifest::new(
                "aoa",
                None,
                json!({ "foot": model.foot, "gamma_deg": a.gamma, "convention": conv }),
            );
            m.write_output(&path, text.as_bytes())?;
            m.save(&PathBuf::from(format!("{}.manifest.json", path.display())))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn pose(p: [f64; 3]) -> Se2State<f64> {
    Se2State::new(p[0], p[1], p[2].to_radians())
}

fn plan_error(e: PlanError) -> anyhow::Error {
    match e {
        PlanError::InvalidConfig(_) | PlanError::TooFewWaypoints(_) => usage(e.to_string()),
        other => anyhow::Error::new(other),
    }
}

fn drop_mars_keys(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.retain(|k, _| !k.contains("mars"));
            map.values_mut().for_each(drop_mars_keys);
        }
        Value::Array(items) => items.iter_mut().for_each(drop_mars_keys),
        _ => {}
    }
}

fn plan_cmd(cfg: &FileConfig, config_path: Option<&Path>, a: PlanArgs) -> anyhow::Result<()> {
    let mut pc: PlannerConfig<f64> = cfg.planner;
    if let Some(v) = a.iterations {
        pc.iterations = v;
    }
    if let Some(v) = a.seed {
        pc.seed = v;
    }
    if let Some(v) = a.turning_radius {
        pc.turning_radius = v;
    }
    if let Some(v) = a.spacing {
        pc.sample_spacing = v;
    }
    if let Some(v) = a.max_slope {
        pc.max_slope_deg = v;
    }
    if a.threads == 0 {
        return Err(usage("--threads must be at least 1"));
    }
    pc.concurrent = a.threads > 1;
    pc.validate().map_err(plan_error)?;
    if pc.concurrent {
        rayon::ThreadPoolBuilder::new()
            .num_threads(a.threads)
            .build_global()
            .context("starting the worker pool")?;
    }

    let grid: ElevationGrid<f64> = match &a.dem {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            load_esri_ascii(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => {
            cfg.crater.validate().map_err(|e| usage(e.to_string()))?;
            gen_crater(&cfg.crater)?
        }
    };

    let waypoints: Vec<Se2State<f64>> = match a.crater_mission {
        Some(r) => {
            if r.is_nan() || r <= 0.0 {
                return Err(usage("--crater-mission radius must be positive"));
            }
            crater_waypoints(&cfg.crater, r).to_vec()
        }
        None => {
            let (Some(s), Some(g)) = (a.start, a.goal) else {
                return Err(usage("--start and --goal are required without --crater-mission"));
            };
            std::iter::once(s)
                .chain(a.via.iter().copied())
                .chain(std::iter::once(g))
                .map(pose)
                .collect()
        }
    };

    let model = EnergyModel::new(foot_type(a.foot));
    let result = plan_mission(&grid, &model, &pc, &waypoints).map_err(plan_error)?;
    let acct = PowerAccounting::default();
    let report = MissionReport::new(&result, &model.foot.to_string(), &acct);

    let mut summary = serde_json::to_value(&report)?;
    if !a.mars {
        drop_mars_keys(&mut summary);
    }
    let hist = result.slope_histogram(pc.max_slope_deg, 5.0);
    summary["slope_histogram"] = json!({
        "lower_deg": hist.lower_deg,
        "bin_width_deg": hist.bin_width_deg,
        "length_m": hist.lengths,
    });

    create_dir(&a.out_dir)?;
    let resolved = json!({
        "planner": pc,
        "foot": model.foot,
        "waypoints": waypoints,
        "dem": a.dem.as_ref().map(|p| p.display().to_string()),
        "crater": if a.dem.is_none() { Some(cfg.crater) } else { None },
        "threads": a.threads,
        "mars": a.mars,
    });
    let mut m = RunManifest::new("plan", Some(pc.seed), resolved);
    with_config_input(&mut m, config_path)?;
    if let Some(p) = &a.dem {
        m.input(p)?;
    }
    let mut csv = Vec::new();
    result.write_csv(&mut csv)?;
    m.write_output(&a.out_dir.join("path.csv"), &csv)?;
    m.write_output(
        &a.out_dir.join("summary.json"),
        (serde_json::to_string_pretty(&summary)? + "\n").as_bytes(),
    )?;
    if a.geojson {
        let geo = serde_json::to_string(&result.to_geojson())? + "\n";
        m.write_output(&a.out_dir.join("path.geojson"), geo.as_bytes())?;
    }
    m.save(&a.out_dir.join("manifest.json"))?;
    print!("{}", report.to_table(a.mars));
    Ok(())
}

fn simulate_cmd(cfg: &FileConfig, config_path: Option<&Path>, a: SimulateArgs) -> anyhow::Result<()> {
    let mut world = cfg.sim;
    if let Some(v) = a.slope {
        world.inclination_deg = v;
    }
    if let Some(v) = a.aoa {
        world.aoa_deg = v;
    }
    if let Some(v) = a.mu {
        world.ground_mu = v;
    }
    let schedule = match a.gait {
        GaitName::Static => GaitSchedule::static_walk(),
        GaitName::StaticLateral => GaitSchedule::static_walk_lateral(),
        GaitName::Trot => GaitSchedule::trot(),
    };
    if !(a.v >= 0.0 && a.v.is_finite()) {
        return Err(usage("--v must be a non-negative speed"));
    }
    let model = RobotModel::default();
    let log = run_walk(&world, &model, &schedule, a.v, a.duration, a.seed).map_err(|e| match e {
        SimError::Invalid(_) => usage(e.to_string()),
        other => anyhow::Error::new(other),
    })?;
    let summary = log.summary();

    create_dir(&a.out_dir)?;
    let resolved = json!({
        "world": world,
        "gait": schedule,
        "v_m_per_s": a.v,
        "duration_s": a.duration,
    });
    let mut m = RunManifest::new("simulate", Some(a.seed), resolved);
    with_config_input(&mut m, config_path)?;
    let mut csv = Vec::new();
    log.write_csv(&mut csv)?;
    m.write_output(&a.out_dir.join("sim.csv"), &csv)?;
    m.write_output(
        &a.out_dir.join("summary.json"),
        (serde_json::to_string_pretty(&summary)? + "\n").as_bytes(),
    )?;
    m.save(&a.out_dir.join("manifest.json"))?;
    println!(
        "min contacts {} | max pitch error {:.2} deg | slip {:.4} m | work {:.1} J | distance {:.3} m",
        summary.min_contacts, summary.max_pitch_error_deg, summary.total_slip_m, summary.work_j, summary.distance_m
    );
    if let Some(t) = summary.fall_time_s {
        println!("torso left the height band at t = {t:.3} s");
    }
    Ok(())
}
