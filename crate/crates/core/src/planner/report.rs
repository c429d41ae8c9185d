use std::io::{self, Write};

use serde::Serialize;
use serde_json::json;

use crate::energy::{mars_scale, PowerAccounting};
use crate::num::Real;

use super::{LegStats, PlanResult};

/// Column header of [`PlanResult::write_csv`].
pub const PATH_CSV_HEADER: &str = "x_m,y_m,theta_rad,heading_slope_deg,e_J_per_m,cum_J";

/// One column of the mission table. Power, velocity and J/m are averages
/// over the whole leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportRow {
    pub distance_m: f64,
    #[serde(rename = "energy_kJ")]
    pub energy_kj: f64,
    #[serde(rename = "energy_mars_kJ")]
    pub energy_mars_kj: f64,
    pub time_s: f64,
    /// Locomotion energy over time [W].
    #[serde(rename = "power_W")]
    pub power_w: f64,
    #[serde(rename = "power_mars_W")]
    pub power_mars_w: f64,
    /// Locomotion power plus the standby draw [W].
    #[serde(rename = "power_incl_standby_W")]
    pub power_incl_standby_w: f64,
    #[serde(rename = "norm_energy_J_per_m")]
    pub norm_energy_j_per_m: f64,
    #[serde(rename = "norm_energy_mars_J_per_m")]
    pub norm_energy_mars_j_per_m: f64,
    pub velocity_m_per_s: f64,
}

impl ReportRow {
    pub fn new<T: Real>(leg: &LegStats<T>, acct: &PowerAccounting<T>) -> Self {
        let f = |v: T| v.to_f64_lossy();
        let ratio = |a: T, b: T| if b > T::zero() { f(a / b) } else { 0.0 };
        let mars = mars_scale(leg.energy, acct);
        let moving = leg.time > T::zero();
        Self {
            distance_m: f(leg.distance),
            energy_kj: f(leg.energy) / 1e3,
            energy_mars_kj: f(mars) / 1e3,
            time_s: f(leg.time),
            power_w: ratio(leg.energy, leg.time),
            power_mars_w: ratio(mars, leg.time),
            power_incl_standby_w: if moving {
                f(leg.energy / leg.time + acct.standby_power)
            } else {
                0.0
            },
            norm_energy_j_per_m: ratio(leg.energy, leg.distance),
            norm_energy_mars_j_per_m: ratio(mars, leg.distance),
            velocity_m_per_s: ratio(leg.distance, leg.time),
        }
    }
}

/// Per-leg and total rows of a mission, in the layout of the published
/// planner table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissionReport {
    pub foot: String,
    pub seed: u64,
    pub iterations: usize,
    pub mars_divisor: f64,
    #[serde(rename = "standby_power_W")]
    pub standby_power_w: f64,
    pub legs: Vec<ReportRow>,
    pub total: ReportRow,
    /// Path length with |heading slope| above 20 deg [m].
    pub length_above_20_deg_m: f64,
    pub max_abs_heading_slope_deg: f64,
}

impl MissionReport {
    pub fn new<T: Real>(plan: &PlanResult<T>, foot: &str, acct: &PowerAccounting<T>) -> Self {
        let total = LegStats {
            distance: plan.distance,
            energy: plan.energy,
            time: plan.time,
        };
        Self {
            foot: foot.to_string(),
            seed: plan.seed,
            iterations: plan.iterations,
            mars_divisor: acct.mars_divisor.to_f64_lossy(),
            standby_power_w: acct.standby_power.to_f64_lossy(),
            legs: plan.legs.iter().map(|l| ReportRow::new(l, acct)).collect(),
            total: ReportRow::new(&total, acct),
            length_above_20_deg_m: plan.length_above(T::lit(20.0)).to_f64_lossy(),
            max_abs_heading_slope_deg: plan.max_abs_slope().to_f64_lossy(),
        }
    }

    /// Fixed-width text table: one column per leg plus the total.
    pub fn to_table(&self, mars: bool) -> String {
        let mut cols: Vec<String> = (1..=self.legs.len()).map(|i| format!("leg {i}")).collect();
        cols.push("total".into());
        let rows: Vec<&ReportRow> = self.legs.iter().chain(std::iter::once(&self.total)).collect();
        let mut out = format!("{:<16}", "");
        for c in &cols {
            out.push_str(&format!("{c:>24}"));
        }
        out.push('\n');
        let mut line = |name: &str, cell: &dyn Fn(&ReportRow) -> String| {
            out.push_str(&format!("{name:<16}"));
            for r in &rows {
                out.push_str(&format!("{:>24}", cell(r)));
            }
            out.push('\n');
        };
        let pair = |a: String, b: String| if mars { format!("{a} ({b})") } else { a };
        line("Distance", &|r| format!("{:.0} m", r.distance_m));
        line("Energy", &|r| {
            pair(format!("{:.0} kJ", r.energy_kj), format!("{:.0} kJ", r.energy_mars_kj))
        });
        line("Time", &|r| format!("{:.0} s", r.time_s));
        line("Power", &|r| {
            pair(format!("{:.0} W", r.power_w), format!("{:.0} W", r.power_mars_w))
        });
        line("Norm. Energy", &|r| {
            pair(
                format!("{:.0} J/m", r.norm_energy_j_per_m),
                format!("{:.0} J/m", r.norm_energy_mars_j_per_m),
            )
        });
        line("Velocity", &|r| format!("{:.2} m/s", r.velocity_m_per_s));
        out
    }
}

impl<T: Real> PlanResult<T> {
    /// One row per path sample under [`PATH_CSV_HEADER`].
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{PATH_CSV_HEADER}")?;
        for s in &self.samples {
            writeln!(
                w,
                "{:.4},{:.4},{:.6},{:.4},{:.4},{:.4}",
                s.state.x.to_f64_lossy(),
                s.state.y.to_f64_lossy(),
                s.state.theta.to_f64_lossy(),
                s.heading_slope_deg.to_f64_lossy(),
                s.energy_per_meter.to_f64_lossy(),
                s.cumulative_energy.to_f64_lossy(),
            )?;
        }
        Ok(())
    }

    /// GeoJSON feature with the path as a LineString in map coordinates.
    pub fn to_geojson(&self) -> serde_json::Value {
        let coords: Vec<[f64; 2]> = self
            .samples
            .iter()
            .map(|s| [s.state.x.to_f64_lossy(), s.state.y.to_f64_lossy()])
            .collect();
        json!({
            "type": "Feature",
            "geometry": { "type": "LineString", "coordinates": coords },
            "properties": {
                "energy_J": self.energy.to_f64_lossy(),
                "distance_m": self.distance.to_f64_lossy(),
                "time_s": self.time.to_f64_lossy(),
                "seed": self.seed,
            }
        })
    }
}
