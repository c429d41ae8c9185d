//! Onboard control stack: terrain plane estimate, virtual model control,
//! contact force distribution and torque mapping.

mod controller;
mod estimator;
mod forces;
pub mod qp;
mod vmc;

use serde::{Deserialize, Serialize};

use crate::gait::Leg;
use crate::kinematics::{LegGeometry, Side};
use crate::linalg::Vec3;
use crate::num::Real;

pub use controller::{ControlOutput, Controller, ControllerConfig, SensorInput};
pub use estimator::{estimate_terrain, TerrainEstimate};
pub use forces::{
    apply_turning_offset, constraint_violation, contact_axes, distribute_forces, stance_torques, ConstraintKind,
    ContactForceSolution, LegForce, StanceFoot,
};
pub use vmc::{desired_base_pose, swing_pd, virtual_wrench, BaseState, BaseTarget, VirtualWrench, VmcGains};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ControlError {
    #[error("terrain estimate is not valid")]
    InvalidEstimate,
    #[error("force distribution needs 1 to 4 stance feet, got {0}")]
    StanceCount(usize),
    #[error("wrench request is not finite")]
    NonFiniteWrench,
    #[error("force distribution infeasible: {0} cannot be satisfied")]
    Infeasible(ConstraintKind),
    #[error("force distribution failed: {0}")]
    Solver(String),
    #[error("invalid robot model: {0}")]
    InvalidModel(String),
}

/// Physical and controller parameters shared by control and simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotModel<T> {
    pub mass: T,
    pub gravity: T,
    /// Principal torso inertia about the base axes [kg m^2].
    pub inertia: Vec3<T>,
    /// Indexed by [`Leg::index`].
    pub legs: [LegGeometry<T>; 4],
    pub mu: T,
    pub f_min_normal: T,
    pub tau_max: T,
    pub hip_height_target: T,
    pub k_turn: T,
}

impl<T: Real> Default for RobotModel<T> {
    fn default() -> Self {
        let (hx, hy) = (T::lit(0.25), T::lit(0.15));
        let leg = |l: Leg| {
            let x = if l.is_front() { hx } else { -hx };
            let y = if l.side() == Side::Left { hy } else { -hy };
            LegGeometry::new(l.side(), Vec3::new(x, y, T::zero()))
        };
        Self {
            mass: T::lit(22.0),
            gravity: T::lit(9.81),
            inertia: Vec3::new(T::lit(0.35), T::lit(0.9), T::lit(1.0)),
            legs: Leg::ALL.map(leg),
            mu: T::lit(0.6),
            f_min_normal: T::lit(5.0),
            tau_max: T::lit(40.0),
            hip_height_target: T::lit(0.38),
            k_turn: T::lit(20.0),
        }
    }
}

impl<T: Real> RobotModel<T> {
    pub const MARS_GRAVITY: f64 = 3.71;
    pub const MOON_GRAVITY: f64 = 1.62;

    pub fn leg(&self, leg: Leg) -> &LegGeometry<T> {
        &self.legs[leg.index()]
    }

    pub fn weight(&self) -> T {
        self.mass * self.gravity
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        let bad = |m: &str| Err(ControlError::InvalidModel(m.to_string()));
        if !(self.mass > T::zero()) {
            return bad("mass must be positive");
        }
        if !(self.gravity > T::zero()) {
            return bad("gravity must be positive");
        }
        if !(self.mu >= T::zero()) {
            return bad("mu must be non-negative");
        }
        if !(self.f_min_normal >= T::zero()) {
            return bad("f_min_normal must be non-negative");
        }
        if !(self.tau_max > T::zero()) {
            return bad("tau_max must be positive");
        }
        if !(self.inertia.x > T::zero() && self.inertia.y > T::zero() && self.inertia.z > T::zero()) {
            return bad("inertia must be positive");
        }
        for l in &self.legs {
            l.validate().map_err(|e| ControlError::InvalidModel(e.to_string()))?;
        }
        if !(self.hip_height_target > self.legs[0].r_min() && self.hip_height_target < self.legs[0].r_max()) {
            return bad("hip_height_target outside the leg workspace");
        }
        Ok(())
    }
}
