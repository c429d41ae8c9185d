//! `slopewalk`: terrain generation, energy tables, path planning and
//! inclined-plane simulation from the command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Invalid flags or config values; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(name = "slopewalk", version, about = "Slope locomotion toolkit")]
pub struct Cli {
    /// TOML experiment file; flags override its values.
    #[arg(long, global = true, env = config::CONFIG_ENV)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic crater as an ESRI ASCII grid.
    GenCrater(GenCraterArgs),
    /// Energy per meter of both foot types from -25 to 25 deg.
    Energy(EnergyArgs),
    /// Optimal angle of attack on a uniform slope.
    Aoa(AoaArgs),
    /// Energy-aware path planning over a terrain model.
    Plan(PlanArgs),
    /// Closed-loop walk on an inclined plane.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
pub struct GenCraterArgs {
    /// Crater diameter [m].
    #[arg(long)]
    pub diameter: Option<f64>,
    /// Bowl depth below the surroundings [m].
    #[arg(long)]
    pub depth: Option<f64>,
    /// Rim height [m].
    #[arg(long)]
    pub rim: Option<f64>,
    /// Map side length [m].
    #[arg(long)]
    pub size: Option<f64>,
    /// Cell size [m].
    #[arg(long)]
    pub cellsize: Option<f64>,
    /// Output grid (.asc); a `.manifest.json` is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EnergyArgs {
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Foot {
    Point,
    Planar,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Convention {
    Surface,
    Projected,
}

#[derive(Args, Debug)]
pub struct AoaArgs {
    #[arg(long, value_enum, default_value_t = Foot::Planar)]
    pub foot: Foot,
    /// Slope inclination [deg].
    #[arg(long, default_value_t = 25.0)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value_t = Convention::Surface)]
    pub convention: Convention,
    /// Output JSON; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    /// Terrain grid (.asc); the configured synthetic crater when absent.
    #[arg(long)]
    pub dem: Option<PathBuf>,
    /// Start pose `x,y,heading_deg`.
    #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
    pub start: Option<[f64; 3]>,
    /// Goal pose `x,y,heading_deg`.
    #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
    pub goal: Option<[f64; 3]>,
    /// Intermediate waypoint `x,y,heading_deg`; repeatable, in order.
    #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
    pub via: Vec<[f64; 3]>,
    /// Descent-ascent crater mission between shoulder points at this radius
    /// [m]; replaces --start/--goal/--via.
    #[arg(long, conflicts_with_all = ["start", "goal", "via"])]
    pub crater_mission: Option<f64>,
    #[arg(long, value_enum, default_value_t = Foot::Planar)]
    pub foot: Foot,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Minimum turning radius [m].
    #[arg(long)]
    pub turning_radius: Option<f64>,
    /// Edge sample spacing [m].
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Heading-slope cap [deg].
    #[arg(long)]
    pub max_slope: Option<f64>,
    /// Worker threads for candidate edge costs; 1 keeps the sequential mode.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Add Mars-scaled energy and power columns.
    #[arg(long)]
    pub mars: bool,
    /// Also write path.geojson.
    #[arg(long)]
    pub geojson: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum GaitName {
    /// Static walk, default phase offsets.
    Static,
    /// Static walk in the lateral sequence.
    StaticLateral,
    Trot,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Plane inclination [deg].
    #[arg(long, allow_hyphen_values = true)]
    pub slope: Option<f64>,
    /// Heading relative to the fall line [deg].
    #[arg(long, allow_hyphen_values = true)]
    pub aoa: Option<f64>,
    /// Commanded speed [m/s].
    #[arg(long, default_value_t = 0.05)]
    pub v: f64,
    #[arg(long, value_enum, default_value_t = GaitName::Static)]
    pub gait: GaitName,
    /// Simulated time [s].
    #[arg(long, default_value_t = 10.0)]
    pub duration: f64,
    /// Ground friction coefficient.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn parse_pose(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,heading_deg, got `{s}`"));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p.parse::<f64>().map_err(|e| format!("`{p}`: {e}"))?;
        if !o.is_finite() {
            return Err(format!("`{p}` is not finite"));
        }
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
