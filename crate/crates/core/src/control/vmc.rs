use serde::{Deserialize, Serialize};

use crate::geom::{boxminus, Rotation3};
use crate::kinematics::JointState;
use crate::linalg::{Vec2, Vec3};
use crate::num::Real;

use super::{ControlError, RobotModel, TerrainEstimate};

/// Torso state in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseState<T> {
    pub position: Vec3<T>,
    pub orientation: Rotation3<T>,
    pub linear_velocity: Vec3<T>,
    pub angular_velocity: Vec3<T>,
}

impl<T: Real> Default for BaseState<T> {
    fn default() -> Self {
        Self {
            position: Vec3::zero(),
            orientation: Rotation3::identity(),
            linear_velocity: Vec3::zero(),
            angular_velocity: Vec3::zero(),
        }
    }
}

/// Torso set point: position in the footprint frame, orientation in the
/// world frame, velocity and feed-forward acceleration in the footprint frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseTarget<T> {
    pub position_f: Vec3<T>,
    pub orientation: Rotation3<T>,
    pub velocity_f: Vec3<T>,
    pub acceleration_f: Vec3<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VmcGains<T> {
    pub kp_pos: Vec3<T>,
    pub kd_vel: Vec3<T>,
    pub kp_rot: Vec3<T>,
    pub kd_rot: Vec3<T>,
}

impl<T: Real> Default for VmcGains<T> {
    fn default() -> Self {
        Self {
            kp_pos: Vec3::new(T::lit(1500.0), T::lit(500.0), T::lit(2000.0)),
            kd_vel: Vec3::new(T::lit(400.0), T::lit(200.0), T::lit(335.0)),
            kp_rot: Vec3::new(T::lit(150.0), T::lit(150.0), T::lit(150.0)),
            kd_rot: Vec3::new(T::lit(19.0), T::lit(19.0), T::lit(19.0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualWrench<T> {
    /// Force before projection, footprint frame.
    pub force_f: Vec3<T>,
    /// Force in the base frame, y component removed.
    pub force_b: Vec3<T>,
    /// Torque in the base frame.
    pub torque_b: Vec3<T>,
}

impl<T: Real> VirtualWrench<T> {
    /// `(Fx, Fy, Fz, Mx, My, Mz)` in the base frame with the yaw moment zeroed.
    pub fn b_vector(&self) -> [T; 6] {
        [
            self.force_b.x,
            self.force_b.y,
            self.force_b.z,
            self.torque_b.x,
            self.torque_b.y,
            T::zero(),
        ]
    }
}

fn mul_elem<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    Vec3::new(a.x * b.x, a.y * b.y, a.z * b.z)
}

/// Pitch follows the footprint, roll is level, yaw follows the footprint
/// heading. The base origin sits `hip_height_target` above the plane and
/// vertically above the footprint origin.
pub fn desired_base_pose<T: Real>(
    estimate: &TerrainEstimate<T>,
    model: &RobotModel<T>,
) -> Result<BaseTarget<T>, ControlError> {
    if !estimate.valid {
        return Err(ControlError::InvalidEstimate);
    }
    let (_, pitch, yaw) = estimate.footprint_euler();
    let orientation = Rotation3::from_euler_zyx(T::zero(), pitch, yaw);
    let up_f = estimate.c_fw().rotate(Vec3::unit_z());
    let h = model.hip_height_target;
    let position_f = Vec3::new(h * up_f.x / up_f.z, h * up_f.y / up_f.z, h);
    Ok(BaseTarget {
        position_f,
        orientation,
        velocity_f: Vec3::zero(),
        acceleration_f: Vec3::zero(),
    })
}

/// Joint PD: `kp (q* - q) + kd (dq* - dq)`.
pub fn swing_pd<T: Real>(q_des: &JointState<T>, q_meas: &JointState<T>, kp: T, kd: T) -> Vec2<T> {
    Vec2::new(
        kp * (q_des.q1 - q_meas.q1) + kd * (q_des.dq1 - q_meas.dq1),
        kp * (q_des.q2 - q_meas.q2) + kd * (q_des.dq2 - q_meas.dq2),
    )
}

/// Virtual force and torque on the torso.
///
/// Force (footprint frame): PD on x, P on y and z position with pure velocity
/// damping, plus gravity compensation and `m a` feed-forward. Torque: PD on the orientation error.
pub fn virtual_wrench<T: Real>(
    state: &BaseState<T>,
    target: &BaseTarget<T>,
    footprint_origin: Vec3<T>,
    estimate: &TerrainEstimate<T>,
    model: &RobotModel<T>,
    gains: &VmcGains<T>,
) -> Result<VirtualWrench<T>, ControlError> {
    if !estimate.valid {
        return Err(ControlError::InvalidEstimate);
    }
    let c_fw = estimate.c_fw();
    let p_fb = c_fw.rotate(state.position - footprint_origin);
    let v_fb = c_fw.rotate(state.linear_velocity);

    let pos_err = target.position_f - p_fb;
    let vel_err = Vec3::new(target.velocity_f.x - v_fb.x, -v_fb.y, -v_fb.z);
    let gravity = c_fw.rotate(Vec3::new(T::zero(), T::zero(), model.weight()));
    let force_f = mul_elem(gains.kp_pos, pos_err)
        + mul_elem(gains.kd_vel, vel_err)
        + gravity
        + target.acceleration_f.scale(model.mass);

    let c_bw = state.orientation.inverse();
    let mut force_b = c_bw.rotate(estimate.c_wf.rotate(force_f));
    force_b.y = T::zero();

    let rot_err = boxminus(&target.orientation, &state.orientation);
    let torque_w = mul_elem(gains.kp_rot, rot_err) - mul_elem(gains.kd_rot, state.angular_velocity);
    let torque_b = c_bw.rotate(torque_w);

    Ok(VirtualWrench {
        force_f,
        force_b,
        torque_b,
    })
}
