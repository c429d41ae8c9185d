//! Slope locomotion toolkit for a quadruped with two actuated joints per leg.
//!
//! The crate is split along the onboard / offboard boundary:
//!
//! * onboard: [`kinematics`], [`gait`], [`control`] (terrain plane estimate,
//!   virtual model control, friction-cone constrained force distribution) and
//!   the inclined-plane simulator in [`sim`];
//! * offboard: the slope energy model in [`energy`], digital terrain models in
//!   [`terrain`] and the energy-aware RRT* planner in [`planner`].
//!
//! All math is generic over the scalar type through [`Real`] (`f32` or
//! `f64`). The aliases at the crate root fix the scalar to `f64`, which is
//! what the command-line tool and the planner tests use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod energy;
pub mod gait;
pub mod geom;
pub mod kinematics;
pub mod linalg;
pub mod num;
pub mod planner;
pub mod sim;
pub mod terrain;

pub use num::Real;

pub type Vec2d = linalg::Vec2<f64>;
pub type Vec3d = linalg::Vec3<f64>;
pub type Rotation3d = geom::Rotation3<f64>;
pub type Rotation3f = geom::Rotation3<f32>;
pub type Se2d = geom::Se2State<f64>;
pub type Se2f = geom::Se2State<f32>;
pub type DubinsPathD = geom::DubinsPath<f64>;
pub type ElevationGridD = terrain::ElevationGrid<f64>;
pub type ElevationGridF = terrain::ElevationGrid<f32>;
pub type LegGeometryD = kinematics::LegGeometry<f64>;
pub type GaitScheduleD = gait::GaitSchedule<f64>;
pub type RobotModelD = control::RobotModel<f64>;
pub type EnergyModelD = energy::EnergyModel<f64>;
pub type EnergyModelF = energy::EnergyModel<f32>;
pub type PlannerConfigD = planner::PlannerConfig<f64>;
pub type PlanResultD = planner::PlanResult<f64>;
pub type SimWorldD = sim::SimWorld<f64>;
pub type SimLogD = sim::SimLog<f64>;
