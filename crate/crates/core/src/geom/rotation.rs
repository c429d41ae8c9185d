use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::linalg::{Mat3, Vec3};
use crate::num::Real;

/// Unit quaternion rotation, stored with a non-negative scalar part.
///
/// `a.compose(&b)` applies `b` first, then `a`, so frame chains read
/// left to right: `C_WF = C_WB ∘ C_BF`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation3<T> {
    w: T,
    x: T,
    y: T,
    z: T,
}

impl<T: Real> Default for Rotation3<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> Rotation3<T> {
    pub fn identity() -> Self {
        Self {
            w: T::one(),
            x: T::zero(),
            y: T::zero(),
            z: T::zero(),
        }
    }

    /// Normalizes and canonicalizes `(w, x, y, z)`. Returns `None` for a zero or
    /// non-finite quaternion.
    pub fn from_quaternion(w: T, x: T, y: T, z: T) -> Option<Self> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !(n > T::epsilon()) || !n.is_finite() {
            return None;
        }
        Some(Self::canonical(w / n, x / n, y / n, z / n))
    }

    fn canonical(w: T, x: T, y: T, z: T) -> Self {
        if w < T::zero() {
            Self {
                w: -w,
                x: -x,
                y: -y,
                z: -z,
            }
        } else {
            Self { w, x, y, z }
        }
    }

    fn renormalized(w: T, x: T, y: T, z: T) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        Self::canonical(w / n, x / n, y / n, z / n)
    }

    pub fn from_axis_angle(axis: Vec3<T>, angle: T) -> Self {
        match axis.normalized() {
            Some(u) => {
                let (s, c) = (angle * T::half()).sin_cos();
                Self::renormalized(c, u.x * s, u.y * s, u.z * s)
            }
            None => Self::identity(),
        }
    }

    /// Exponential map of a rotation vector (axis times angle, radians).
    pub fn from_rotation_vector(v: Vec3<T>) -> Self {
        let angle = v.norm();
        if angle < T::epsilon() {
            // first-order expansion keeps tiny rotations exact to machine precision
            let h = v.scale(T::half());
            return Self::renormalized(T::one(), h.x, h.y, h.z);
        }
        Self::from_axis_angle(v, angle)
    }

    /// Rotation about the x axis (roll).
    pub fn rot_x(angle: T) -> Self {
        Self::from_axis_angle(Vec3::unit_x(), angle)
    }

    /// Rotation about the y axis (pitch).
    pub fn rot_y(angle: T) -> Self {
        Self::from_axis_angle(Vec3::unit_y(), angle)
    }

    /// Rotation about the z axis (yaw).
    pub fn rot_z(angle: T) -> Self {
        Self::from_axis_angle(Vec3::unit_z(), angle)
    }

    /// `Rz(yaw) · Ry(pitch) · Rx(roll)`.
    pub fn from_euler_zyx(roll: T, pitch: T, yaw: T) -> Self {
        Self::rot_z(yaw)
            .compose(&Self::rot_y(pitch))
            .compose(&Self::rot_x(roll))
    }

    /// `(roll, pitch, yaw)` of the ZYX decomposition.
    pub fn euler_zyx(&self) -> (T, T, T) {
        let m = self.to_matrix().m;
        let pitch = (-m[2][0]).clamp_to(-T::one(), T::one()).asin();
        let roll = m[2][1].atan2(m[2][2]);
        let yaw = m[1][0].atan2(m[0][0]);
        (roll, pitch, yaw)
    }

    pub fn w(&self) -> T {
        self.w
    }

    pub fn xyz(&self) -> Vec3<T> {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn norm(&self) -> T {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Hamilton product `self ⊗ other`, renormalized.
    pub fn compose(&self, o: &Self) -> Self {
        let (a, b) = (self, o);
        Self::renormalized(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }

    pub fn inverse(&self) -> Self {
        Self {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    pub fn rotate(&self, v: Vec3<T>) -> Vec3<T> {
        let u = self.xyz();
        let t = u.cross(v).scale(T::two());
        v + t.scale(self.w) + u.cross(t)
    }

    pub fn to_matrix(&self) -> Mat3<T> {
        Mat3::from_columns(
            self.rotate(Vec3::unit_x()),
            self.rotate(Vec3::unit_y()),
            self.rotate(Vec3::unit_z()),
        )
    }

    /// Rotation from an orthonormal matrix (columns are the rotated axes).
    pub fn from_matrix(r: &Mat3<T>) -> Self {
        let m = &r.m;
        let one = T::one();
        let quarter = T::lit(0.25);
        let trace = m[0][0] + m[1][1] + m[2][2];
        if trace > T::zero() {
            let s = (trace + one).sqrt() * T::two();
            Self::renormalized(
                quarter * s,
                (m[2][1] - m[1][2]) / s,
                (m[0][2] - m[2][0]) / s,
                (m[1][0] - m[0][1]) / s,
            )
        } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
            let s = (one + m[0][0] - m[1][1] - m[2][2]).sqrt() * T::two();
            Self::renormalized(
                (m[2][1] - m[1][2]) / s,
                quarter * s,
                (m[0][1] + m[1][0]) / s,
                (m[0][2] + m[2][0]) / s,
            )
        } else if m[1][1] > m[2][2] {
            let s = (one + m[1][1] - m[0][0] - m[2][2]).sqrt() * T::two();
            Self::renormalized(
                (m[0][2] - m[2][0]) / s,
                (m[0][1] + m[1][0]) / s,
                quarter * s,
                (m[1][2] + m[2][1]) / s,
            )
        } else {
            let s = (one + m[2][2] - m[0][0] - m[1][1]).sqrt() * T::two();
            Self::renormalized(
                (m[1][0] - m[0][1]) / s,
                (m[0][2] + m[2][0]) / s,
                (m[1][2] + m[2][1]) / s,
                quarter * s,
            )
        }
    }

    /// Logarithm map: the rotation vector with angle in `[0, π]`.
    pub fn log(&self) -> Vec3<T> {
        let v = self.xyz();
        let s = v.norm();
        if s < T::epsilon() {
            return v.scale(T::two() / self.w);
        }
        let angle = T::two() * s.atan2(self.w);
        v.scale(angle / s)
    }

    /// Geodesic angle of the rotation, in `[0, π]`.
    pub fn angle(&self) -> T {
        T::two() * self.xyz().norm().atan2(self.w)
    }
}

impl<T: Real> Mul for Rotation3<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        self.compose(&o)
    }
}

/// `target ⊟ current`: rotation vector of `target ∘ current⁻¹`, short way.
pub fn boxminus<T: Real>(target: &Rotation3<T>, current: &Rotation3<T>) -> Vec3<T> {
    target.compose(&current.inverse()).log()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: Vec3<f64>, b: Vec3<f64>, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn same_rotation(a: &Rotation3<f64>, b: &Rotation3<f64>, tol: f64) -> bool {
        boxminus(a, b).norm() <= tol
    }

    #[test]
    fn identity_composition() {
        let i = Rotation3::<f64>::identity();
        assert_eq!(i.compose(&i), i);
    }

    #[test]
    fn yaw_quarter_turns_add() {
        let q = Rotation3::rot_z(FRAC_PI_2);
        assert!(same_rotation(&q.compose(&q), &Rotation3::rot_z(PI), 1e-12));
        let v = q.compose(&q).rotate(Vec3::unit_x());
        assert!(close(v, Vec3::new(-1.0, 0.0, 0.0), 1e-12));
    }

    #[test]
    fn boxminus_single_axis() {
        let t = Rotation3::rot_y(10f64.to_radians());
        let d = boxminus(&t, &Rotation3::identity());
        assert!(close(d, Vec3::new(0.0, 0.174_532_925_199_432_95, 0.0), 1e-12));
        assert_eq!(boxminus(&t, &t).norm(), 0.0);
    }

    #[test]
    fn euler_roundtrip() {
        let q = Rotation3::from_euler_zyx(0.1f64, -0.4, 2.0);
        let (r, p, y) = q.euler_zyx();
        assert!((r - 0.1).abs() < 1e-12 && (p + 0.4).abs() < 1e-12 && (y - 2.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_roundtrip_all_branches() {
        for q in [
            Rotation3::from_euler_zyx(0.2, 0.3, 0.1),
            Rotation3::rot_x(3.0),
            Rotation3::rot_y(3.0),
            Rotation3::rot_z(3.0),
        ] {
            let back = Rotation3::from_matrix(&q.to_matrix());
            assert!(same_rotation(&q, &back, 1e-12));
        }
    }

    #[test]
    fn scalar_part_is_non_negative() {
        let q = Rotation3::rot_z(1.9 * PI);
        assert!(q.w() >= 0.0);
        assert!((q.angle() - 0.1 * PI).abs() < 1e-12);
    }

    #[test]
    fn long_composition_chain_keeps_unit_norm() {
        let step = Rotation3::from_rotation_vector(Vec3::new(0.013f64, -0.021, 0.007));
        let mut q = Rotation3::identity();
        for _ in 0..100_000 {
            q = q.compose(&step);
            assert!((q.norm() - 1.0).abs() < 1e-9);
        }
    }

    fn arb_rotation() -> impl Strategy<Value = Rotation3<f64>> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_filter_map("non-zero quaternion", |(w, x, y, z)| {
                Rotation3::from_quaternion(w, x, y, z)
            })
    }

    proptest! {
        #[test]
        fn inverse_law(r in arb_rotation()) {
            prop_assert!(same_rotation(&r.compose(&r.inverse()), &Rotation3::identity(), 1e-9));
            prop_assert!((r.compose(&r.inverse()).norm() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn composition_is_associative(a in arb_rotation(), b in arb_rotation(), c in arb_rotation()) {
            let l = a.compose(&b).compose(&c);
            let r = a.compose(&b.compose(&c));
            prop_assert!(same_rotation(&l, &r, 1e-9));
        }

        #[test]
        fn boxminus_magnitude_is_geodesic_angle(p in arb_rotation(), q in arb_rotation()) {
            // independent formula: 2 acos(|<p, q>|)
            let d = p.w() * q.w() + p.xyz().dot(q.xyz());
            let geodesic = 2.0 * d.abs().min(1.0).acos();
            // acos loses digits near 1; the oracle itself is only sharp away from zero
            prop_assume!(geodesic > 1e-3);
            prop_assert!((boxminus(&p, &q).norm() - geodesic).abs() < 1e-9);
        }

        #[test]
        fn boxminus_is_antisymmetric(p in arb_rotation(), q in arb_rotation()) {
            let pq = boxminus(&p, &q);
            prop_assume!(pq.norm() < PI - 1e-6);
            prop_assert!(close(pq, -boxminus(&q, &p), 1e-9));
        }

        #[test]
        fn exp_log_roundtrip(v in (-1.5..1.5f64, -1.5..1.5f64, -1.5..1.5f64)) {
            let v = Vec3::new(v.0, v.1, v.2);
            prop_assert!(close(Rotation3::from_rotation_vector(v).log(), v, 1e-12));
        }
    }
}
