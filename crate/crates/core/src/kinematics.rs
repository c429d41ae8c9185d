//! Planar kinematics of the coaxial five-bar leg.
//!
//! Both motors sit on the hip axis. Motor `i` swings a proximal link of
//! length `b` at angle `q_i`; two distal links of length `a` meet at the knee
//! point `K` on the bisector of the motor angles, and the shank (`c`) plus the
//! foot offset (`d`) continue along that bisector to the contact point.
//!
//! Angles are measured in the hip x-z plane from straight down, positive
//! toward +x. With `psi = (q1 + q2) / 2` and `delta = (q1 - q2) / 2`:
//!
//! ```text
//! r_K  = b cos(delta) + sqrt(a^2 - b^2 sin^2(delta))
//! foot = (r_K + c + d) (sin psi, -cos psi)
//! ```
//!
//! The configuration `delta >= 0` (motor 1 ahead of motor 2) is the only
//! branch used; `delta = 0` is full extension and singular.

use serde::{Deserialize, Serialize};

use crate::linalg::{Mat2, Vec2, Vec3};
use crate::num::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KinematicsError {
    #[error("foot target ({x:.4}, {z:.4}) is outside the workspace annulus [{r_min:.4}, {r_max:.4}]")]
    Unreachable { x: f64, z: f64, r_min: f64, r_max: f64 },
    #[error("joint angles q1={q1:.4}, q2={q2:.4} violate the linkage fold limits")]
    ClosureFailure { q1: f64, q2: f64 },
    #[error("invalid leg geometry: {0}")]
    InvalidGeometry(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegGeometry<T> {
    pub link_a: T,
    pub link_b: T,
    pub link_c: T,
    pub foot_offset_d: T,
    pub side: Side,
    /// Hip axis position in the base frame.
    pub attachment: Vec3<T>,
    /// Largest half-angle between the two motors, radians.
    pub max_fold: T,
    /// Largest bisector angle from vertical, radians.
    pub max_swing: T,
}

impl<T: Real> LegGeometry<T> {
    pub fn new(side: Side, attachment: Vec3<T>) -> Self {
        Self {
            link_a: T::lit(0.250),
            link_b: T::lit(0.120),
            link_c: T::lit(0.130),
            foot_offset_d: T::lit(0.020),
            side,
            attachment,
            max_fold: T::lit(150f64.to_radians()),
            max_swing: T::lit(80f64.to_radians()),
        }
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        let lengths = [self.link_a, self.link_b, self.link_c, self.foot_offset_d];
        if lengths.iter().any(|l| !(*l > T::zero())) {
            return Err(KinematicsError::InvalidGeometry("link lengths must be positive".into()));
        }
        if self.link_a <= self.link_b {
            return Err(KinematicsError::InvalidGeometry(
                "distal link must be longer than proximal link".into(),
            ));
        }
        if !(self.max_fold > T::zero() && self.max_fold < T::PI()) {
            return Err(KinematicsError::InvalidGeometry("max_fold must lie in (0, pi)".into()));
        }
        if !(self.max_swing > T::zero() && self.max_swing <= T::FRAC_PI_2()) {
            return Err(KinematicsError::InvalidGeometry(
                "max_swing must lie in (0, pi/2]".into(),
            ));
        }
        Ok(())
    }

    fn knee_radius(&self, delta: T) -> T {
        let (s, c) = delta.sin_cos();
        let b = self.link_b;
        b * c + (self.link_a * self.link_a - b * b * s * s).sqrt()
    }

    fn knee_radius_derivative(&self, delta: T) -> T {
        let (s, c) = delta.sin_cos();
        let b = self.link_b;
        let root = (self.link_a * self.link_a - b * b * s * s).sqrt();
        -b * s - b * b * s * c / root
    }

    /// Distance from the hip axis to the foot for a given fold half-angle.
    pub fn foot_radius(&self, delta: T) -> T {
        self.knee_radius(delta) + self.link_c + self.foot_offset_d
    }

    /// Full extension radius.
    pub fn r_max(&self) -> T {
        self.foot_radius(T::zero())
    }

    /// Radius at the fold limit.
    pub fn r_min(&self) -> T {
        self.foot_radius(self.max_fold)
    }

    /// Largest symmetric step (front-to-back foot excursion) that keeps the
    /// foot within `reach_fraction` of full extension at the given height.
    pub fn max_step_length(&self, hip_height: T, reach_fraction: T) -> T {
        let r = self.r_max() * reach_fraction;
        if r <= hip_height {
            return T::zero();
        }
        let half = (r * r - hip_height * hip_height).sqrt();
        let swing_bound = hip_height * self.max_swing.tan();
        T::two() * half.min(swing_bound)
    }

    /// Hip-frame foot position mapped into the base frame (sagittal plane).
    pub fn foot_in_base(&self, foot: Vec2<T>) -> Vec3<T> {
        self.attachment + Vec3::new(foot.x, T::zero(), foot.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointState<T> {
    pub q1: T,
    pub q2: T,
    pub dq1: T,
    pub dq2: T,
}

impl<T: Real> JointState<T> {
    pub fn new(q1: T, q2: T) -> Self {
        Self {
            q1,
            q2,
            dq1: T::zero(),
            dq2: T::zero(),
        }
    }

    pub fn with_velocity(q1: T, q2: T, dq1: T, dq2: T) -> Self {
        Self { q1, q2, dq1, dq2 }
    }

    pub fn from_bisector(psi: T, delta: T) -> Self {
        Self::new(psi + delta, psi - delta)
    }

    pub fn q(&self) -> Vec2<T> {
        Vec2::new(self.q1, self.q2)
    }

    pub fn dq(&self) -> Vec2<T> {
        Vec2::new(self.dq1, self.dq2)
    }

    /// `(psi, delta)`: bisector angle and fold half-angle.
    pub fn bisector(&self) -> (T, T) {
        ((self.q1 + self.q2) * T::half(), (self.q1 - self.q2) * T::half())
    }
}

fn direction<T: Real>(psi: T) -> Vec2<T> {
    let (s, c) = psi.sin_cos();
    Vec2::new(s, -c)
}

fn direction_derivative<T: Real>(psi: T) -> Vec2<T> {
    let (s, c) = psi.sin_cos();
    Vec2::new(c, s)
}

fn check_limits<T: Real>(geom: &LegGeometry<T>, q: &JointState<T>) -> Result<(T, T), KinematicsError> {
    let (psi, delta) = q.bisector();
    let slack = T::lit(1e-12);
    if !(delta >= -slack && delta <= geom.max_fold + slack && psi.abs() <= geom.max_swing + slack) {
        return Err(KinematicsError::ClosureFailure {
            q1: q.q1.to_f64_lossy(),
            q2: q.q2.to_f64_lossy(),
        });
    }
    Ok((psi, delta.max(T::zero())))
}

/// Foot contact point `(x, z)` in the hip frame.
pub fn forward_kinematics<T: Real>(geom: &LegGeometry<T>, q: &JointState<T>) -> Result<Vec2<T>, KinematicsError> {
    let (psi, delta) = check_limits(geom, q)?;
    Ok(direction(psi).scale(geom.foot_radius(delta)))
}

/// Joint angles placing the foot at `foot` (hip frame), velocities zero.
pub fn inverse_kinematics<T: Real>(geom: &LegGeometry<T>, foot: Vec2<T>) -> Result<JointState<T>, KinematicsError> {
    let r = foot.norm();
    let (r_min, r_max) = (geom.r_min(), geom.r_max());
    let psi = foot.x.atan2(-foot.y);
    let tol = T::epsilon() * T::lit(16.0) * r_max;
    if !(r >= r_min - tol && r <= r_max + tol) || psi.abs() > geom.max_swing {
        return Err(KinematicsError::Unreachable {
            x: foot.x.to_f64_lossy(),
            z: foot.y.to_f64_lossy(),
            r_min: r_min.to_f64_lossy(),
            r_max: r_max.to_f64_lossy(),
        });
    }
    let rk = r - geom.link_c - geom.foot_offset_d;
    let (a, b) = (geom.link_a, geom.link_b);
    let cos_delta = ((b * b + rk * rk - a * a) / (T::two() * b * rk)).clamp_to(-T::one(), T::one());
    let delta = cos_delta.acos();
    Ok(JointState::from_bisector(psi, delta))
}

/// `d foot / d(q1, q2)`, columns per joint.
pub fn jacobian<T: Real>(geom: &LegGeometry<T>, q: &JointState<T>) -> Mat2<T> {
    let (psi, delta) = q.bisector();
    let r = geom.foot_radius(delta);
    let dr = geom.knee_radius_derivative(delta);
    let u = direction(psi);
    let du = direction_derivative(psi).scale(r);
    let radial = u.scale(dr);
    Mat2::from_columns((du + radial).scale(T::half()), (du - radial).scale(T::half()))
}

/// Joint torques that make the foot push with force `force` (hip frame).
pub fn joint_torques<T: Real>(jac: &Mat2<T>, force: Vec2<T>) -> Vec2<T> {
    jac.transpose().mul_vec(force)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn leg() -> LegGeometry<f64> {
        LegGeometry::new(Side::Left, Vec3::zero())
    }

    fn random_q(rng: &mut ChaCha8Rng, g: &LegGeometry<f64>) -> JointState<f64> {
        let psi = rng.gen_range(-1.2..1.2);
        let delta = rng.gen_range(0.05..g.max_fold - 0.05);
        JointState::with_velocity(
            psi + delta,
            psi - delta,
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
        )
    }

    #[test]
    fn workspace_contains_experiment_heights() {
        let g = leg();
        assert!((g.r_max() - 0.52).abs() < 1e-12);
        assert!(g.r_min() < 0.32 && g.r_max() > 0.50);
        for h in [0.32, 0.38, 0.45, 0.50] {
            assert!(inverse_kinematics(&g, Vec2::new(0.0, -h)).is_ok());
        }
    }

    #[test]
    fn mirror_configuration_is_below_hip() {
        let g = leg();
        let p = forward_kinematics(&g, &JointState::new(0.7, -0.7)).unwrap();
        assert_eq!(p.x, 0.0);
        assert!(p.y < 0.0);
        let q = inverse_kinematics(&g, Vec2::new(0.0, -0.38)).unwrap();
        assert!((q.q1 + q.q2).abs() < 1e-15);
    }

    #[test]
    fn extension_boundary() {
        let g = leg();
        let q = inverse_kinematics(&g, Vec2::new(0.0, -g.r_max())).unwrap();
        assert!((q.q1 - q.q2).abs() < 1e-6);
        assert!(jacobian(&g, &q).det().abs() < 1e-6);
        let dets: Vec<f64> = [0.4, 0.1, 0.01, 0.0]
            .iter()
            .map(|d| jacobian(&g, &JointState::from_bisector(0.2, *d)).det().abs())
            .collect();
        assert!(dets.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(dets[3], 0.0);
        assert!(inverse_kinematics(&g, Vec2::new(0.0, -0.53)).is_err());
        assert!(inverse_kinematics(&g, Vec2::new(0.0, -0.2)).is_err());
    }

    #[test]
    fn fold_limit_is_a_closure_failure() {
        let g = leg();
        assert!(matches!(
            forward_kinematics(&g, &JointState::new(-0.3, 0.3)),
            Err(KinematicsError::ClosureFailure { .. })
        ));
    }

    #[test]
    fn mirror_velocities_move_foot_vertically() {
        let g = leg();
        let q = JointState::new(0.9, -0.9);
        let v = jacobian(&g, &q).mul_vec(Vec2::new(1.0, -1.0));
        assert!(v.x.abs() < 1e-15);
        assert!(v.y.abs() > 0.01);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let g = leg();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-7;
        for _ in 0..1000 {
            let q = random_q(&mut rng, &g);
            let fk = |a: f64, b: f64| forward_kinematics(&g, &JointState::new(a, b)).unwrap();
            let c0 = (fk(q.q1 + h, q.q2) - fk(q.q1 - h, q.q2)).scale(0.5 / h);
            let c1 = (fk(q.q1, q.q2 + h) - fk(q.q1, q.q2 - h)).scale(0.5 / h);
            let err = (jacobian(&g, &q) - Mat2::from_columns(c0, c1)).frobenius();
            assert!(err < 1e-6, "{err}");
        }
    }

    #[test]
    fn round_trips() {
        let g = leg();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let q = random_q(&mut rng, &g);
            let back = inverse_kinematics(&g, forward_kinematics(&g, &q).unwrap()).unwrap();
            assert!((back.q1 - q.q1).abs() < 1e-9 && (back.q2 - q.q2).abs() < 1e-9);

            let r = rng.gen_range(g.r_min()..g.r_max());
            let psi: f64 = rng.gen_range(-1.2..1.2);
            let p = Vec2::new(r * psi.sin(), -r * psi.cos());
            let p2 = forward_kinematics(&g, &inverse_kinematics(&g, p).unwrap()).unwrap();
            assert!((p2 - p).norm() < 1e-9);
        }
    }

    #[test]
    fn max_step_is_reachable() {
        let g = leg();
        let l = g.max_step_length(0.38, 0.96);
        assert!(l > 0.4);
        for x in [-l / 2.0, l / 2.0] {
            assert!(inverse_kinematics(&g, Vec2::new(x, -0.38)).is_ok());
        }
    }

    #[test]
    fn single_precision_round_trip() {
        let g = LegGeometry::<f32>::new(Side::Right, Vec3::zero());
        let q = inverse_kinematics(&g, Vec2::new(0.05f32, -0.4)).unwrap();
        let p = forward_kinematics(&g, &q).unwrap();
        assert!((p.x - 0.05).abs() < 1e-5 && (p.y + 0.4).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn virtual_work_balance(psi in -1.2..1.2f64, delta in 0.01..2.5f64,
                                fx in -200.0..200.0f64, fz in -200.0..200.0f64,
                                w1 in -5.0..5.0f64, w2 in -5.0..5.0f64) {
            let g = leg();
            let q = JointState::with_velocity(psi + delta, psi - delta, w1, w2);
            let j = jacobian(&g, &q);
            let f = Vec2::new(fx, fz);
            let tau = joint_torques(&j, f);
            let lhs = tau.dot(q.dq());
            let rhs = f.dot(j.mul_vec(q.dq()));
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }
    }
}
