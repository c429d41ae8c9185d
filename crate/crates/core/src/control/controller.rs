use serde::{Deserialize, Serialize};

use crate::gait::{
    contact_state, step_length_for, swing_trajectory_to, ContactAssignment, GaitSchedule, Leg, LegPhase,
};
use crate::kinematics::{forward_kinematics, inverse_kinematics, jacobian, JointState};
use crate::linalg::{Mat2, Vec2, Vec3};
use crate::num::Real;

use super::{
    apply_turning_offset, desired_base_pose, distribute_forces, estimate_terrain, stance_torques, swing_pd,
    virtual_wrench, BaseState, BaseTarget, ContactForceSolution, ControlError, RobotModel, StanceFoot, TerrainEstimate,
    VmcGains,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig<T> {
    pub gains: VmcGains<T>,
    pub swing_kp: T,
    pub swing_kd: T,
    /// Time constant of the footprint origin low-pass filter [s].
    pub footprint_filter: T,
    /// Fraction of full leg extension usable for stepping.
    pub reach_fraction: T,
    /// Fore-aft torso offset [m] held while a single leg swings: forward for
    /// a hind leg, backward for a front leg.
    pub sway: T,
}

impl<T: Real> Default for ControllerConfig<T> {
    fn default() -> Self {
        Self {
            gains: VmcGains::default(),
            swing_kp: T::lit(60.0),
            swing_kd: T::lit(1.5),
            footprint_filter: T::lit(0.05),
            reach_fraction: T::lit(0.96),
            sway: T::lit(0.04),
        }
    }
}

/// One tick of proprioceptive input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorInput<T> {
    pub time: T,
    pub base: BaseState<T>,
    /// Indexed by [`Leg::index`].
    pub joints: [JointState<T>; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput<T> {
    pub torques: [Vec2<T>; 4],
    pub contact: ContactAssignment<T>,
    pub estimate: TerrainEstimate<T>,
    pub target: Option<BaseTarget<T>>,
    pub footprint_origin: Vec3<T>,
    pub wrench: [T; 6],
    pub solution: Option<ContactForceSolution<T>>,
    pub jacobians: [Mat2<T>; 4],
    pub error: Option<ControlError>,
}

/// Gait coordinator plus the stance and swing controllers.
#[derive(Debug, Clone)]
pub struct Controller<T> {
    pub model: RobotModel<T>,
    pub schedule: GaitSchedule<T>,
    pub config: ControllerConfig<T>,
    estimate: TerrainEstimate<T>,
    footprint_origin: Option<Vec3<T>>,
    reference: Option<Vec3<T>>,
    last_contact_w: [Option<Vec3<T>>; 4],
    liftoff: [Vec2<T>; 4],
    previous: Option<[LegPhase; 4]>,
}

impl<T: Real> Controller<T> {
    pub fn new(model: RobotModel<T>, schedule: GaitSchedule<T>, config: ControllerConfig<T>) -> Self {
        Self {
            model,
            schedule,
            config,
            estimate: TerrainEstimate::flat(),
            footprint_origin: None,
            reference: None,
            last_contact_w: [None; 4],
            liftoff: [Vec2::zero(); 4],
            previous: None,
        }
    }

    pub fn estimate(&self) -> &TerrainEstimate<T> {
        &self.estimate
    }

    /// Largest step the legs allow at the target hip height.
    pub fn max_step(&self) -> T {
        self.model.legs[0].max_step_length(self.model.hip_height_target, self.config.reach_fraction)
    }

    /// Nominal touchdown point in the hip frame: the hip projected along
    /// gravity onto the estimated plane, shifted forward by half the stance
    /// excursion.
    fn foothold(&self, leg: Leg, base: &BaseState<T>, origin: Vec3<T>, advance: T) -> Vec2<T> {
        let att = self.model.leg(leg).attachment;
        let c_fw = self.estimate.c_fw();
        let hip_f = c_fw.rotate(base.position + base.orientation.rotate(att) - origin);
        let up_f = c_fw.rotate(Vec3::unit_z());
        let mut foot_f = hip_f - up_f.scale(hip_f.z / up_f.z);
        foot_f.x += advance;
        let foot_b = base
            .orientation
            .inverse()
            .rotate(self.estimate.c_wf.rotate(foot_f) + origin - base.position);
        let rel = foot_b - att;
        Vec2::new(rel.x, rel.z)
    }

    /// Mean swing direction at `t`: +1 per swinging hind leg, -1 per front.
    fn swing_sign(&self, t: T) -> T {
        let contact = contact_state(&self.schedule, t);
        let (mut sum, mut n) = (T::zero(), 0);
        for leg in Leg::ALL {
            if !contact.in_stance(leg) {
                sum += if leg.is_front() { -T::one() } else { T::one() };
                n += 1;
            }
        }
        if n == 0 {
            T::zero()
        } else {
            sum / T::lit(n as f64)
        }
    }

    /// Sway offset with its first two time derivatives. Held during swings,
    /// blended by a half cosine across each all-stance gap.
    fn sway(&self, t: T) -> (T, T, T) {
        let a = self.config.sway;
        let s = &self.schedule;
        let d = s.duty_factor;
        if a == T::zero() || d >= T::one() {
            return (T::zero(), T::zero(), T::zero());
        }
        let contact = contact_state(s, t);
        if contact.stance_count() < 4 {
            return (a * self.swing_sign(t), T::zero(), T::zero());
        }
        let mut since = T::infinity();
        let mut until = T::infinity();
        for leg in Leg::ALL {
            let f = s.cycle_phase(leg, t);
            since = since.min(f * s.cycle_time);
            until = until.min((d - f) * s.cycle_time);
        }
        let gap = since + until;
        let eps = s.cycle_time * T::lit(1e-6);
        let from = self.swing_sign(t - since - eps);
        let to = self.swing_sign(t + until + eps);
        let pi = T::lit(std::f64::consts::PI);
        let u = pi * since / gap;
        let k = a * (to - from) * T::half();
        (
            a * from + k * (T::one() - u.cos()),
            k * pi * u.sin() / gap,
            k * pi * pi * u.cos() / (gap * gap),
        )
    }

    pub fn step(&mut self, input: &SensorInput<T>, dt: T, v_des: T, yaw_rate_des: T) -> ControlOutput<T> {
        let contact = contact_state(&self.schedule, input.time);
        let base = &input.base;

        let mut feet_b = [Vec3::zero(); 4];
        let mut jacobians = [Mat2::zero(); 4];
        let mut fk_error = None;
        for leg in Leg::ALL {
            let i = leg.index();
            let g = self.model.leg(leg);
            jacobians[i] = jacobian(g, &input.joints[i]);
            match forward_kinematics(g, &input.joints[i]) {
                Ok(p) => feet_b[i] = g.foot_in_base(p),
                Err(e) => fk_error = Some(ControlError::InvalidModel(e.to_string())),
            }
        }

        for leg in Leg::ALL {
            let i = leg.index();
            let was = self.previous.map(|p| p[i]);
            if contact.in_stance(leg) {
                self.last_contact_w[i] = Some(base.position + base.orientation.rotate(feet_b[i]));
            } else if was != Some(LegPhase::Swing) {
                let att = self.model.leg(leg).attachment;
                self.liftoff[i] = Vec2::new(feet_b[i].x - att.x, feet_b[i].z - att.z);
            }
        }
        self.previous = Some(contact.state);

        let contacts_b: Vec<Vec3<T>> = self
            .last_contact_w
            .iter()
            .flatten()
            .map(|p| base.orientation.inverse().rotate(*p - base.position))
            .collect();
        let fresh = estimate_terrain(&contacts_b, &base.orientation);
        if fresh.valid {
            self.estimate = fresh;
        } else {
            // keep the last plane, re-expressed through the current attitude
            self.estimate.c_bf = base.orientation.inverse().compose(&self.estimate.c_wf);
            self.estimate.normal = self.estimate.c_bf.rotate(Vec3::unit_z());
        }

        let stance: Vec<Leg> = contact.stance_legs().collect();
        let alpha = dt / (self.config.footprint_filter + dt);
        let filter = |prev: Option<Vec3<T>>, raw: Vec3<T>| match prev {
            Some(p) => p + (raw - p).scale(alpha),
            None => raw,
        };
        let step = step_length_for(&self.schedule, v_des, self.max_step()).length;
        let advance = step * self.schedule.duty_factor * T::half();
        let v_step = step / self.schedule.cycle_time;
        if !stance.is_empty() {
            let inv = T::one() / T::lit(stance.len() as f64);
            let mut mean = Vec3::zero();
            let mut vote = Vec3::zero();
            for l in &stance {
                let foot_w = base.position + base.orientation.rotate(feet_b[l.index()]);
                // foot position relative to the torso expected at this stance phase
                let att = self.model.leg(*l).attachment;
                let back = v_step * self.schedule.stance_duration() * contact.phase[l.index()];
                let nominal = Vec3::new(att.x + advance - back, att.y, T::zero());
                mean += foot_w;
                vote += foot_w - self.estimate.c_wf.rotate(nominal);
            }
            self.footprint_origin = Some(filter(self.footprint_origin, mean.scale(inv)));
            self.reference = Some(filter(self.reference, vote.scale(inv)));
        }
        let origin = self.footprint_origin.unwrap_or(base.position);
        let reference = self.reference.unwrap_or(origin);

        let mut torques = [Vec2::zero(); 4];
        let mut error = fk_error;
        let mut solution = None;
        let mut wrench = [T::zero(); 6];
        let (sway, sway_rate, sway_acc) = self.sway(input.time);
        let shift = self.estimate.c_fw().rotate(reference - origin);
        let target = desired_base_pose(&self.estimate, &self.model).ok().map(|mut t| {
            t.position_f += Vec3::new(shift.x + sway, shift.y, T::zero());
            t.velocity_f = Vec3::new(v_step + sway_rate, T::zero(), T::zero());
            t.acceleration_f = Vec3::new(sway_acc, T::zero(), T::zero());
            t
        });

        if let Some(target) = &target {
            match virtual_wrench(base, target, origin, &self.estimate, &self.model, &self.config.gains) {
                Ok(w) => wrench = w.b_vector(),
                Err(e) => error = Some(e),
            }
            if !stance.is_empty() && error.is_none() {
                let feet: Vec<StanceFoot<T>> = stance
                    .iter()
                    .map(|l| StanceFoot {
                        leg: *l,
                        position: feet_b[l.index()],
                        jacobian: jacobians[l.index()],
                    })
                    .collect();
                match distribute_forces(&wrench, &feet, &self.model, &self.estimate.c_bf) {
                    Ok(sol) => {
                        let turned = apply_turning_offset(&sol, yaw_rate_des, &self.model);
                        for (leg, tau) in stance_torques(&turned, &jacobians) {
                            torques[leg.index()] = tau;
                        }
                        solution = Some(turned);
                    }
                    Err(e) => error = Some(e),
                }
            }
        } else {
            error = Some(ControlError::InvalidEstimate);
        }

        let swing_time = self.schedule.swing_duration();
        for leg in Leg::ALL {
            if contact.in_stance(leg) {
                continue;
            }
            let i = leg.index();
            let phase = contact.phase[i];
            let end = self.foothold(leg, base, origin, advance);
            let g = self.model.leg(leg);
            let h = T::lit(1e-4);
            let p0 = swing_trajectory_to(&self.schedule, phase, self.liftoff[i], end);
            let p1 = swing_trajectory_to(&self.schedule, (phase + h).min(T::one()), self.liftoff[i], end);
            let Ok(q0) = inverse_kinematics(g, p0) else {
                continue;
            };
            let dq = match inverse_kinematics(g, p1) {
                Ok(q1) if phase + h <= T::one() => {
                    let s = T::one() / (h * swing_time);
                    Vec2::new((q1.q1 - q0.q1) * s, (q1.q2 - q0.q2) * s)
                }
                _ => Vec2::zero(),
            };
            let q_des = JointState::with_velocity(q0.q1, q0.q2, dq.x, dq.y);
            let tau = swing_pd(&q_des, &input.joints[i], self.config.swing_kp, self.config.swing_kd);
            let lim = self.model.tau_max;
            torques[i] = Vec2::new(tau.x.clamp_to(-lim, lim), tau.y.clamp_to(-lim, lim));
        }

        ControlOutput {
            torques,
            contact,
            estimate: self.estimate,
            target,
            footprint_origin: origin,
            wrench,
            solution,
            jacobians,
            error,
        }
    }
}
