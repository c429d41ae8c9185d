use std::io::{self, Write};

use serde::Serialize;

use crate::control::{BaseState, BaseTarget, ContactForceSolution};
use crate::linalg::{Vec2, Vec3};
use crate::num::Real;

use super::SimWorld;

/// Column header of [`SimLog::write_csv`]. Angles in degrees, lengths in
/// meters, torques in N m, work in J. `contact_*` is 1 while the foot carries
/// load; `slip_*` is cumulative.
pub const CSV_HEADER: &str = "time_s,x_m,y_m,z_m,roll_deg,pitch_deg,yaw_deg,target_pitch_deg,height_m,target_height_m,\
contact_LF,contact_RF,contact_LH,contact_RH,slip_LF_m,slip_RF_m,slip_LH_m,slip_RH_m,\
tau_LF_1_Nm,tau_LF_2_Nm,tau_RF_1_Nm,tau_RF_2_Nm,tau_LH_1_Nm,tau_LH_2_Nm,tau_RH_1_Nm,tau_RH_2_Nm,work_J";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSample<T> {
    pub time: T,
    pub position: Vec3<T>,
    /// `(roll, pitch, yaw)` [rad].
    pub euler: Vec3<T>,
    pub target_pitch: Option<T>,
    /// Distance of the base origin from the plane along its normal.
    pub height: T,
    pub contact: [bool; 4],
    /// Within the touchdown load ramp.
    pub transition: [bool; 4],
    pub scheduled_stance: usize,
    pub slip: [T; 4],
    pub torques: [Vec2<T>; 4],
    pub work: T,
    /// Norm of the unrealized part of the virtual wrench.
    pub residual: T,
    /// Commanded `(tangential, normal)` contact force of each stance leg.
    pub commanded: [Option<Vec2<T>>; 4],
    /// Distance of the torso inside the support polygon of the loaded feet.
    pub margin: T,
}

impl<T: Real> SimSample<T> {
    /// Loaded contacts, counting feet still in their touchdown ramp.
    pub fn contact_count(&self) -> usize {
        self.contact
            .iter()
            .zip(&self.transition)
            .filter(|(c, r)| **c || **r)
            .count()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SimCounters {
    /// Ticks whose commanded forces broke a force-distribution constraint.
    pub qp_violations: usize,
    /// Ticks where the controller reported an error.
    pub control_errors: usize,
    /// Stance foot ticks with a pulling (non-positive) normal force.
    pub contact_losses: usize,
    /// Stance feet whose Jacobian could not be inverted.
    pub singular_legs: usize,
    /// Anchors dropped because the leg could not reach them.
    pub ik_failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimLog<T> {
    pub world: SimWorld<T>,
    pub cycle_time: T,
    pub expected_pitch: T,
    pub target_height: T,
    pub samples: Vec<SimSample<T>>,
    pub counters: SimCounters,
    /// Straight-line displacement of the base over the run, measured on the plane.
    pub distance: T,
    /// Time at which the torso left the height band `[h/2, 2h]` around the
    /// hip height target; the run stops there.
    pub fall_time: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub duration_s: f64,
    pub ticks: usize,
    pub inclination_deg: f64,
    pub aoa_deg: f64,
    pub ground_mu: f64,
    pub min_contacts: usize,
    pub expected_pitch_deg: f64,
    pub max_pitch_error_deg: f64,
    pub final_height_m: f64,
    pub total_slip_m: f64,
    pub slip_per_cycle_m: f64,
    #[serde(rename = "work_J")]
    pub work_j: f64,
    pub distance_m: f64,
    pub fall_time_s: Option<f64>,
    pub counters: SimCounters,
}

impl<T: Real> SimLog<T> {
    pub(super) fn new(world: SimWorld<T>, cycle_time: T, expected_pitch: T, target_height: T) -> Self {
        Self {
            world,
            cycle_time,
            expected_pitch,
            target_height,
            samples: Vec::new(),
            counters: SimCounters::default(),
            distance: T::zero(),
            fall_time: None,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub(super) fn record(
        &mut self,
        time: T,
        base: &BaseState<T>,
        target: Option<&BaseTarget<T>>,
        height: T,
        contact: [bool; 4],
        transition: [bool; 4],
        scheduled_stance: usize,
        slip: [T; 4],
        torques: [Vec2<T>; 4],
        work: T,
        solution: Option<&ContactForceSolution<T>>,
        margin: T,
    ) {
        let mut commanded = [None; 4];
        if let Some(sol) = solution {
            for f in &sol.forces {
                commanded[f.leg.index()] = Some(f.lambda);
            }
        }
        let (r, p, y) = base.orientation.euler_zyx();
        self.samples.push(SimSample {
            time,
            position: base.position,
            euler: Vec3::new(r, p, y),
            target_pitch: target.map(|t| t.orientation.euler_zyx().1),
            height,
            contact,
            transition,
            scheduled_stance,
            slip,
            torques,
            work,
            residual: solution.map_or(T::zero(), |s| s.residual),
            commanded,
            margin,
        });
    }

    pub fn duration(&self) -> T {
        self.samples.last().map_or(T::zero(), |s| s.time)
    }

    /// Fewest loaded contacts over the run.
    pub fn min_contacts(&self) -> usize {
        self.samples.iter().map(SimSample::contact_count).min().unwrap_or(0)
    }

    /// Fewest loaded contacts over samples at or after `t0`.
    pub fn min_contacts_after(&self, t0: T) -> usize {
        self.samples
            .iter()
            .filter(|s| s.time >= t0)
            .map(SimSample::contact_count)
            .min()
            .unwrap_or(0)
    }

    pub fn total_slip(&self) -> T {
        self.samples.last().map_or(T::zero(), |s| s.slip.iter().copied().sum())
    }

    pub fn slip_per_cycle(&self) -> T {
        let d = self.duration();
        if d > T::zero() {
            self.total_slip() * self.cycle_time / d
        } else {
            T::zero()
        }
    }

    pub fn work(&self) -> T {
        self.samples.last().map_or(T::zero(), |s| s.work)
    }

    /// Largest `|pitch - expected|` over samples at or after `t0` [rad].
    pub fn max_pitch_error_after(&self, t0: T) -> T {
        self.samples
            .iter()
            .filter(|s| s.time >= t0)
            .map(|s| (s.euler.y - self.expected_pitch).abs())
            .fold(T::zero(), T::max)
    }

    pub fn final_height(&self) -> T {
        self.samples.last().map_or(T::zero(), |s| s.height)
    }

    pub fn summary(&self) -> SimSummary {
        let f = |v: T| v.to_f64_lossy();
        SimSummary {
            duration_s: f(self.duration()),
            ticks: self.samples.len(),
            inclination_deg: f(self.world.inclination_deg),
            aoa_deg: f(self.world.aoa_deg),
            ground_mu: f(self.world.ground_mu),
            min_contacts: self.min_contacts(),
            expected_pitch_deg: f(self.expected_pitch).to_degrees(),
            max_pitch_error_deg: f(self.max_pitch_error_after(T::zero())).to_degrees(),
            final_height_m: f(self.final_height()),
            total_slip_m: f(self.total_slip()),
            slip_per_cycle_m: f(self.slip_per_cycle()),
            work_j: f(self.work()),
            distance_m: f(self.distance),
            fall_time_s: self.fall_time.map(f),
            counters: self.counters,
        }
    }

    /// One row per tick under [`CSV_HEADER`].
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for s in &self.samples {
            let deg = |v: T| v.to_f64_lossy().to_degrees();
            let target = s.target_pitch.map_or(f64::NAN, deg);
            write!(
                w,
                "{:.4},{:.6},{:.6},{:.6},{:.4},{:.4},{:.4},{:.4},{:.6},{:.4}",
                s.time.to_f64_lossy(),
                s.position.x.to_f64_lossy(),
                s.position.y.to_f64_lossy(),
                s.position.z.to_f64_lossy(),
                deg(s.euler.x),
                deg(s.euler.y),
                deg(s.euler.z),
                target,
                s.height.to_f64_lossy(),
                self.target_height.to_f64_lossy(),
            )?;
            for c in s.contact {
                write!(w, ",{}", u8::from(c))?;
            }
            for v in s.slip {
                write!(w, ",{:.6e}", v.to_f64_lossy())?;
            }
            for t in s.torques {
                write!(w, ",{:.4},{:.4}", t.x.to_f64_lossy(), t.y.to_f64_lossy())?;
            }
            writeln!(w, ",{:.6}", s.work.to_f64_lossy())?;
        }
        Ok(())
    }
}
