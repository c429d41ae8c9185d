//! Inclined-plane walking simulator.
//!
//! The torso is a rigid body; the legs are massless while in stance. A
//! stance foot is pinned to an anchor on the plane and transmits the ground
//! reaction `lambda = -J^-T tau` produced by the commanded joint torques. The
//! reaction is checked against the Coulomb cone of the ground: a pulling
//! foot carries no load, an overloaded foot saturates at `mu N` and its
//! anchor slides. Lateral and yaw loads, which the planar legs cannot
//! produce, are carried by a penalty spring at each anchor. Swing legs are
//! joint-space double integrators with a small rotor inertia.
//!
//! The world plane is `z = tan(inclination) x`; the robot starts at the
//! origin with yaw equal to the angle of attack, so 0 deg walks straight up
//! the fall line.

mod log;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::{constraint_violation, BaseState, Controller, ControllerConfig, RobotModel, SensorInput};
use crate::gait::{contact_state, GaitSchedule, Leg};
use crate::geom::Rotation3;
use crate::kinematics::{forward_kinematics, inverse_kinematics, jacobian, JointState};
use crate::linalg::{Vec2, Vec3};
use crate::num::Real;

pub use log::{SimCounters, SimLog, SimSample, SimSummary, CSV_HEADER};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation input: {0}")]
    Invalid(String),
    #[error("simulation diverged at t = {time:.3} s: {message}")]
    Diverged { time: f64, message: String },
}

/// Ground and integration parameters of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimWorld<T> {
    /// Plane inclination [deg].
    pub inclination_deg: T,
    /// Heading relative to the fall line [deg], 0 = straight uphill.
    pub aoa_deg: T,
    /// Coulomb coefficient of the ground.
    pub ground_mu: T,
    /// Lateral penalty stiffness per contact [N/m].
    pub stiffness: T,
    /// Integration step [s].
    pub tick: T,
    /// Viscous slip law: slide velocity = excess tangential force / this [N s/m].
    pub slip_damping: T,
    /// Load ramp after touchdown [s].
    pub touchdown_ramp: T,
    /// Roll spring on the torso [N m/rad].
    pub roll_stiffness: T,
    /// Rotor inertia of a swinging joint [kg m^2].
    pub joint_inertia: T,
    /// Uniform anchor height noise at touchdown [m].
    pub contact_noise: T,
}

impl<T: Real> Default for SimWorld<T> {
    fn default() -> Self {
        Self {
            inclination_deg: T::zero(),
            aoa_deg: T::zero(),
            ground_mu: T::lit(35f64.to_radians().tan()),
            stiffness: T::lit(2e4),
            tick: T::lit(0.002),
            slip_damping: T::lit(2000.0),
            touchdown_ramp: T::lit(0.01),
            roll_stiffness: T::lit(10.0),
            joint_inertia: T::lit(0.01),
            contact_noise: T::zero(),
        }
    }
}

impl<T: Real> SimWorld<T> {
    pub fn incline(inclination_deg: T) -> Self {
        Self {
            inclination_deg,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Invalid(m));
        let lim = T::lit(30.0);
        if !(self.inclination_deg >= -lim && self.inclination_deg <= lim) {
            return bad(format!("inclination {} outside [-30, 30] deg", self.inclination_deg));
        }
        if !self.aoa_deg.is_finite() {
            return bad("aoa must be finite".into());
        }
        if !(self.tick > T::zero()) {
            return bad(format!("tick must be positive, got {}", self.tick));
        }
        if !(self.stiffness > T::zero()) {
            return bad(format!("stiffness must be positive, got {}", self.stiffness));
        }
        if !(self.ground_mu >= T::zero()) {
            return bad("ground_mu must be non-negative".into());
        }
        if !(self.slip_damping > T::zero() && self.joint_inertia > T::zero()) {
            return bad("slip_damping and joint_inertia must be positive".into());
        }
        if !(self.touchdown_ramp >= T::zero() && self.roll_stiffness >= T::zero() && self.contact_noise >= T::zero()) {
            return bad("ramp, roll stiffness and contact noise must be non-negative".into());
        }
        Ok(())
    }

    /// Upward unit normal of the plane.
    pub fn normal(&self) -> Vec3<T> {
        let g = self.inclination_deg.to_radians();
        Vec3::new(-g.sin(), T::zero(), g.cos())
    }

    /// Height of the plane above the world point `p` is `p.z - plane_z(p.x)`.
    pub fn plane_z(&self, x: T) -> T {
        self.inclination_deg.to_radians().tan() * x
    }

    /// Torso pitch of a level-rolled robot aligned with the plane.
    pub fn expected_pitch(&self) -> T {
        let (g, a) = (self.inclination_deg.to_radians(), self.aoa_deg.to_radians());
        -(g.tan() * a.cos()).atan()
    }

    fn signed_distance(&self, p: Vec3<T>) -> T {
        (p.z - self.plane_z(p.x)) * self.inclination_deg.to_radians().cos()
    }

    fn project(&self, p: Vec3<T>) -> Vec3<T> {
        p - self.normal().scale(self.signed_distance(p))
    }
}

struct Anchor<T> {
    point: Vec3<T>,
    since: T,
    lateral: Option<T>,
}

struct Body<T> {
    position: Vec3<T>,
    velocity: Vec3<T>,
    orientation: Rotation3<T>,
    /// Angular velocity in the base frame.
    omega_b: Vec3<T>,
}

impl<T: Real> Body<T> {
    fn state(&self) -> BaseState<T> {
        BaseState {
            position: self.position,
            orientation: self.orientation,
            linear_velocity: self.velocity,
            angular_velocity: self.orientation.rotate(self.omega_b),
        }
    }
}

fn hip_frame<T: Real>(model: &RobotModel<T>, body: &Body<T>, leg: Leg, world: Vec3<T>) -> Vec3<T> {
    body.orientation.inverse().rotate(world - body.position) - model.leg(leg).attachment
}

/// Runs the controller in closed loop on the inclined plane for `duration`
/// seconds. `seed` drives the optional touchdown height noise.
pub fn run_walk<T: Real>(
    world: &SimWorld<T>,
    model: &RobotModel<T>,
    schedule: &GaitSchedule<T>,
    v_des: T,
    duration: T,
    seed: u64,
) -> Result<SimLog<T>, SimError> {
    run_walk_with(
        world,
        model,
        schedule,
        &ControllerConfig::default(),
        v_des,
        duration,
        seed,
    )
}

pub fn run_walk_with<T: Real>(
    world: &SimWorld<T>,
    model: &RobotModel<T>,
    schedule: &GaitSchedule<T>,
    config: &ControllerConfig<T>,
    v_des: T,
    duration: T,
    seed: u64,
) -> Result<SimLog<T>, SimError> {
    world.validate()?;
    model.validate().map_err(|e| SimError::Invalid(e.to_string()))?;
    schedule.validate().map_err(|e| SimError::Invalid(e.to_string()))?;
    if !(duration >= schedule.cycle_time) {
        return Err(SimError::Invalid(format!(
            "duration {duration} s is shorter than one gait cycle ({} s)",
            schedule.cycle_time
        )));
    }
    if !v_des.is_finite() {
        return Err(SimError::Invalid("v_des must be finite".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inertia = model.inertia;
    let dt = world.tick;
    let n = world.normal();
    let gravity = Vec3::new(T::zero(), T::zero(), -model.gravity);
    let h = model.hip_height_target;

    let pitch0 = world.expected_pitch();
    let mut body = Body {
        position: Vec3::new(T::zero(), T::zero(), h / n.z),
        velocity: Vec3::zero(),
        orientation: Rotation3::from_euler_zyx(T::zero(), pitch0, world.aoa_deg.to_radians()),
        omega_b: Vec3::zero(),
    };

    // feet start on the plane, vertically below the hips
    let mut joints = [JointState::default(); 4];
    let mut anchors: [Option<Anchor<T>>; 4] = [None, None, None, None];
    let start = contact_state(schedule, T::zero());
    for leg in Leg::ALL {
        let i = leg.index();
        let hip = body.position + body.orientation.rotate(model.leg(leg).attachment);
        let foot = Vec3::new(hip.x, hip.y, world.plane_z(hip.x));
        let rel = hip_frame(model, &body, leg, foot);
        joints[i] = inverse_kinematics(model.leg(leg), Vec2::new(rel.x, rel.z))
            .map_err(|e| SimError::Invalid(format!("initial stance of {leg}: {e}")))?;
        if start.in_stance(leg) {
            anchors[i] = Some(Anchor {
                point: foot,
                since: -world.touchdown_ramp,
                lateral: None,
            });
        }
    }

    let mut controller = Controller::new(*model, *schedule, *config);
    let steps = (duration / dt).round().to_usize().unwrap_or(0);
    let mut log = SimLog::new(*world, schedule.cycle_time, pitch0, h);
    let mut slip = [T::zero(); 4];
    let mut work = T::zero();
    // critical for the torso mass on four springs, capped so the explicit
    // damping of the roll mode (feet a hip height below the base) stays stable
    let c_lat =
        (T::two() * (world.stiffness * model.mass / T::lit(4.0)).sqrt()).min(inertia.x / (T::lit(4.0) * h * h * dt));
    let c_roll = T::two() * (world.roll_stiffness * inertia.x).sqrt();
    let origin_xy = |p: Vec3<T>| Vec2::new(p.x, p.y);
    let start_xy = origin_xy(body.position);

    for k in 0..=steps {
        let t = T::lit(k as f64) * dt;
        let input = SensorInput {
            time: t,
            base: body.state(),
            joints,
        };
        let out = controller.step(&input, dt, v_des, T::zero());
        if out.error.is_some() {
            log.counters.control_errors += 1;
        }
        if let Some(sol) = &out.solution {
            if constraint_violation(sol, &out.jacobians, model) > T::lit(1e-6) {
                log.counters.qp_violations += 1;
            }
        }
        let scheduled = contact_state(schedule, t);

        // touchdown and lift-off follow the schedule
        for leg in Leg::ALL {
            let i = leg.index();
            if scheduled.in_stance(leg) && anchors[i].is_none() {
                let g = model.leg(leg);
                let foot = forward_kinematics(g, &joints[i])
                    .map(|p| body.position + body.orientation.rotate(g.foot_in_base(p)))
                    .unwrap_or(body.position);
                let mut point = world.project(foot);
                if world.contact_noise > T::zero() {
                    let e = world.contact_noise.to_f64_lossy();
                    point += n.scale(T::lit(rng.gen_range(-e..=e)));
                }
                anchors[i] = Some(Anchor {
                    point,
                    since: t,
                    lateral: None,
                });
            } else if !scheduled.in_stance(leg) && anchors[i].is_some() {
                anchors[i] = None;
                joints[i].dq1 = T::zero();
                joints[i].dq2 = T::zero();
            }
        }

        let lim = model.tau_max;
        let torques = out
            .torques
            .map(|t| Vec2::new(t.x.clamp_to(-lim, lim), t.y.clamp_to(-lim, lim)));

        let mut force_w = Vec3::zero();
        let mut torque_b = Vec3::zero();
        let mut contact = [false; 4];
        let mut transition = [false; 4];
        let c_bw = body.orientation.inverse();
        for leg in Leg::ALL {
            let i = leg.index();
            let Some(anchor) = anchors[i].as_mut() else {
                continue;
            };
            let age = t - anchor.since;
            transition[i] = age < world.touchdown_ramp;
            let ramp = if world.touchdown_ramp > T::zero() {
                (age / world.touchdown_ramp).clamp_to(T::zero(), T::one())
            } else {
                T::one()
            };
            let rel = hip_frame(model, &body, leg, anchor.point);
            let jac = jacobian(model.leg(leg), &joints[i]);
            let Some(lambda) = jac.transpose().solve(-torques[i], T::lit(1e-9)) else {
                log.counters.singular_legs += 1;
                continue;
            };
            let dy = rel.y;
            let dy_rate = anchor.lateral.map_or(T::zero(), |prev| (dy - prev) / dt);
            anchor.lateral = Some(dy);
            let lateral = world.stiffness * dy + c_lat * dy_rate;
            let f_b = Vec3::new(lambda.x, lateral, lambda.y).scale(ramp);
            let mut f_w = body.orientation.rotate(f_b);

            let normal = f_w.dot(n);
            if normal <= T::zero() {
                log.counters.contact_losses += 1;
                continue;
            }
            contact[i] = true;
            let tangential = f_w - n.scale(normal);
            let ft = tangential.norm();
            let cap = world.ground_mu * normal;
            if ft > cap {
                let dir = tangential.scale(T::one() / ft);
                let speed = (ft - cap) / world.slip_damping;
                anchor.point -= dir.scale(speed * dt);
                slip[i] += speed * dt;
                f_w = n.scale(normal) + dir.scale(cap);
            }
            force_w += f_w;
            let foot_b = c_bw.rotate(anchor.point - body.position);
            torque_b += foot_b.cross(c_bw.rotate(f_w));
        }

        let loaded: Vec<Vec2<T>> = Leg::ALL
            .iter()
            .filter(|l| contact[l.index()] || transition[l.index()])
            .filter_map(|l| anchors[l.index()].as_ref())
            .map(|a| Vec2::new(a.point.x, a.point.y))
            .collect();
        let margin = support_margin(&loaded, Vec2::new(body.position.x, body.position.y));

        let (roll, _, _) = body.orientation.euler_zyx();
        torque_b.x -= world.roll_stiffness * roll + c_roll * body.omega_b.x;

        log.record(
            t,
            &body.state(),
            out.target.as_ref(),
            world.signed_distance(body.position),
            contact,
            transition,
            scheduled.stance_count(),
            slip,
            torques,
            work,
            out.solution.as_ref(),
            margin,
        );

        // torso: semi-implicit Euler
        let acc = force_w.scale(T::one() / model.mass) + gravity;
        body.velocity += acc.scale(dt);
        body.position += body.velocity.scale(dt);
        let w = body.omega_b;
        let iw = Vec3::new(inertia.x * w.x, inertia.y * w.y, inertia.z * w.z);
        let rhs = torque_b - w.cross(iw);
        body.omega_b += Vec3::new(rhs.x / inertia.x, rhs.y / inertia.y, rhs.z / inertia.z).scale(dt);
        body.orientation = body
            .orientation
            .compose(&Rotation3::from_rotation_vector(body.omega_b.scale(dt)));

        if !body.position.is_finite() || !body.orientation.norm().is_finite() {
            return Err(SimError::Diverged {
                time: t.to_f64_lossy(),
                message: "torso pose is not finite".into(),
            });
        }
        let height = world.signed_distance(body.position);
        if height < model.hip_height_target * T::half() || height > T::two() * model.hip_height_target {
            log.fall_time = Some(t);
            break;
        }

        // legs: stance joints follow the anchors, swing joints integrate
        for leg in Leg::ALL {
            let i = leg.index();
            let g = model.leg(leg);
            let q_prev = joints[i];
            if let Some(anchor) = &anchors[i] {
                let rel = hip_frame(model, &body, leg, anchor.point);
                match inverse_kinematics(g, Vec2::new(rel.x, rel.z)) {
                    Ok(q) => {
                        let fresh = t - anchor.since < dt * T::half();
                        joints[i] = if fresh {
                            q
                        } else {
                            JointState::with_velocity(q.q1, q.q2, (q.q1 - q_prev.q1) / dt, (q.q2 - q_prev.q2) / dt)
                        };
                    }
                    Err(_) => {
                        log.counters.ik_failures += 1;
                        anchors[i] = None;
                    }
                }
            } else {
                let tau = torques[i];
                let mut q = q_prev;
                q.dq1 += tau.x / world.joint_inertia * dt;
                q.dq2 += tau.y / world.joint_inertia * dt;
                q.q1 += q.dq1 * dt;
                q.q2 += q.dq2 * dt;
                joints[i] = clamp_joint(g, q);
            }
            let dq = joints[i].dq();
            work += (torques[i].x * dq.x).max(T::zero()) * dt + (torques[i].y * dq.y).max(T::zero()) * dt;
        }
    }

    log.distance = (origin_xy(body.position) - start_xy).norm() / world.inclination_deg.to_radians().cos();
    Ok(log)
}

/// Signed horizontal distance from `p` to the edges of the convex hull of
/// `points`, positive inside. Fewer than three points gives `-inf`.
pub fn support_margin<T: Real>(points: &[Vec2<T>], p: Vec2<T>) -> T {
    if points.len() < 3 {
        return T::neg_infinity();
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| {
        a.x.partial_cmp(&b.x)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.y.partial_cmp(&b.y).unwrap_or(std::cmp::Ordering::Equal))
    });
    let cross = |o: Vec2<T>, a: Vec2<T>, b: Vec2<T>| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    let mut hull: Vec<Vec2<T>> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vec2<T>>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for q in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], *q) <= T::zero() {
                hull.pop();
            }
            hull.push(*q);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        return T::neg_infinity();
    }
    (0..hull.len())
        .map(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
            let e = b - a;
            cross(a, b, p) / e.norm()
        })
        .fold(T::infinity(), T::min)
}

/// Keeps a free joint pair inside the linkage limits, stopping the motion
/// that hits a stop.
fn clamp_joint<T: Real>(g: &crate::kinematics::LegGeometry<T>, q: JointState<T>) -> JointState<T> {
    let (psi, delta) = q.bisector();
    let (dpsi, ddelta) = ((q.dq1 + q.dq2) * T::half(), (q.dq1 - q.dq2) * T::half());
    let min_fold = T::lit(1e-3);
    let (psi_c, dpsi_c) = if psi.abs() > g.max_swing {
        (psi.clamp_to(-g.max_swing, g.max_swing), T::zero())
    } else {
        (psi, dpsi)
    };
    let (delta_c, ddelta_c) = if delta < min_fold || delta > g.max_fold {
        (delta.clamp_to(min_fold, g.max_fold), T::zero())
    } else {
        (delta, ddelta)
    };
    JointState::with_velocity(psi_c + delta_c, psi_c - delta_c, dpsi_c + ddelta_c, dpsi_c - ddelta_c)
}
