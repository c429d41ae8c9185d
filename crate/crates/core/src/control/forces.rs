use std::fmt;

use crate::gait::Leg;
use crate::geom::Rotation3;
use crate::kinematics::Side;
use crate::linalg::{DMat, Mat2, Vec2, Vec3};
use crate::num::Real;

use super::qp::{solve_qp, QpError};
use super::{ControlError, RobotModel};

/// Constraint family of the force distribution, used to report infeasibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    MinNormal { leg: Leg },
    FrictionCone { leg: Leg, positive: bool },
    TorqueLimit { leg: Leg, joint: usize, upper: bool },
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintKind::MinNormal { leg } => write!(f, "minimum normal force on {leg}"),
            ConstraintKind::FrictionCone { leg, positive } => {
                let side = if *positive { "+" } else { "-" };
                write!(f, "friction cone ({side} tangential) on {leg}")
            }
            ConstraintKind::TorqueLimit { leg, joint, upper } => {
                let side = if *upper { "upper" } else { "lower" };
                write!(f, "{side} torque limit of joint {} on {leg}", joint + 1)
            }
        }
    }
}

/// A stance foot as seen by the force distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StanceFoot<T> {
    pub leg: Leg,
    /// Contact point relative to the base origin, base frame.
    pub position: Vec3<T>,
    pub jacobian: Mat2<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegForce<T> {
    pub leg: Leg,
    /// `(tangential, normal)` ground reaction on the robot.
    pub lambda: Vec2<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactForceSolution<T> {
    pub forces: Vec<LegForce<T>>,
    /// Tangential and normal unit directions in the base x-z plane.
    pub tangent_b: Vec3<T>,
    pub normal_b: Vec3<T>,
    /// `(Fx, Fy, Fz, Mx, My, Mz)` realized by the solution, base frame.
    pub achieved: [T; 6],
    /// `|A x - b|`.
    pub residual: T,
}

impl<T: Real> ContactForceSolution<T> {
    /// Force of one leg in the base frame.
    pub fn force_b(&self, leg: Leg) -> Option<Vec3<T>> {
        self.forces
            .iter()
            .find(|f| f.leg == leg)
            .map(|f| self.tangent_b.scale(f.lambda.x) + self.normal_b.scale(f.lambda.y))
    }

    /// `||A x - b||^2`, the unregularized objective.
    pub fn objective(&self) -> T {
        self.residual * self.residual
    }
}

/// Contact axes in the base x-z plane from the footprint orientation.
pub fn contact_axes<T: Real>(c_bf: &Rotation3<T>) -> (Vec3<T>, Vec3<T>) {
    let x_f = c_bf.rotate(Vec3::unit_x());
    let t = Vec3::new(x_f.x, T::zero(), x_f.z)
        .normalized()
        .unwrap_or_else(Vec3::unit_x);
    let n = Vec3::new(-t.z, T::zero(), t.x);
    (t, n)
}

/// `(tau_1, tau_2)` per unit tangential and per unit normal force:
/// `tau = -J^T F_hip` with `F_hip = t * tangent + n * normal` (x, z).
fn torque_map<T: Real>(jac: &Mat2<T>, tangent: Vec3<T>, normal: Vec3<T>) -> Mat2<T> {
    let jt = jac.transpose();
    let ct = jt.mul_vec(Vec2::new(tangent.x, tangent.z));
    let cn = jt.mul_vec(Vec2::new(normal.x, normal.z));
    Mat2::from_columns(-ct, -cn)
}

fn regularization<T: Real>() -> T {
    T::epsilon().sqrt() * T::lit(0.1)
}

/// Least-squares contact forces realizing `wrench` subject to the minimum
/// normal force, the linearized friction cone and the joint torque limits.
///
/// `c_bf` orients the contact frame: forces are decomposed along the
/// footprint x axis and the plane normal, both projected into the base x-z
/// plane. The y force and yaw moment of `wrench` are ignored.
pub fn distribute_forces<T: Real>(
    wrench: &[T; 6],
    feet: &[StanceFoot<T>],
    model: &RobotModel<T>,
    c_bf: &Rotation3<T>,
) -> Result<ContactForceSolution<T>, ControlError> {
    let k = feet.len();
    if !(1..=4).contains(&k) {
        return Err(ControlError::StanceCount(k));
    }
    if wrench.iter().any(|v| !v.is_finite()) {
        return Err(ControlError::NonFiniteWrench);
    }
    let (tangent, normal) = contact_axes(c_bf);
    let mut b = *wrench;
    b[1] = T::zero();
    b[5] = T::zero();

    let nv = 2 * k;
    let mut a = DMat::zeros(6, nv);
    for (i, foot) in feet.iter().enumerate() {
        for (j, dir) in [tangent, normal].into_iter().enumerate() {
            let m = foot.position.cross(dir);
            let col = [dir.x, dir.y, dir.z, m.x, m.y, m.z];
            for (r, v) in col.into_iter().enumerate() {
                a[(r, 2 * i + j)] = v;
            }
        }
    }

    let at = a.transpose();
    let mut h = at.matmul(&a);
    let eps = regularization::<T>();
    for i in 0..nv {
        h[(i, i)] += eps;
    }
    let g: Vec<T> = at.mul_vec(&b).into_iter().map(|v| -v).collect();

    let mut rows = Vec::new();
    let mut d = Vec::new();
    let mut kinds = Vec::new();
    let push = |rows: &mut Vec<T>, coeffs: [(usize, T); 2]| {
        let mut r = vec![T::zero(); nv];
        for (c, v) in coeffs {
            r[c] += v;
        }
        rows.extend(r);
    };
    for (i, foot) in feet.iter().enumerate() {
        let (ti, ni) = (2 * i, 2 * i + 1);
        push(&mut rows, [(ni, T::one()), (ti, T::zero())]);
        d.push(model.f_min_normal);
        kinds.push(ConstraintKind::MinNormal { leg: foot.leg });
        for positive in [true, false] {
            let s = if positive { -T::one() } else { T::one() };
            push(&mut rows, [(ni, model.mu), (ti, s)]);
            d.push(T::zero());
            kinds.push(ConstraintKind::FrictionCone {
                leg: foot.leg,
                positive,
            });
        }
        let tm = torque_map(&foot.jacobian, tangent, normal);
        for joint in 0..2 {
            let (ct, cn) = (tm.m[joint][0], tm.m[joint][1]);
            for upper in [true, false] {
                let s = if upper { -T::one() } else { T::one() };
                push(&mut rows, [(ti, s * ct), (ni, s * cn)]);
                d.push(-model.tau_max);
                kinds.push(ConstraintKind::TorqueLimit {
                    leg: foot.leg,
                    joint,
                    upper,
                });
            }
        }
    }
    let c = DMat::from_rows(kinds.len(), nv, rows);
    let sol = solve_qp(&h, &g, &c, &d).map_err(|e| match e {
        QpError::Infeasible(i) => ControlError::Infeasible(kinds[i]),
        other => ControlError::Solver(other.to_string()),
    })?;

    let ax = a.mul_vec(&sol.x);
    let mut achieved = [T::zero(); 6];
    achieved.copy_from_slice(&ax);
    let residual = ax.iter().zip(&b).map(|(p, q)| (*p - *q) * (*p - *q)).sum::<T>().sqrt();
    let forces = feet
        .iter()
        .enumerate()
        .map(|(i, f)| LegForce {
            leg: f.leg,
            lambda: Vec2::new(sol.x[2 * i], sol.x[2 * i + 1]),
        })
        .collect();
    Ok(ContactForceSolution {
        forces,
        tangent_b: tangent,
        normal_b: normal,
        achieved,
        residual,
    })
}

/// Adds the yaw offset `+k_turn * yaw_rate` to the tangential force of
/// right legs and subtracts it on left legs.
pub fn apply_turning_offset<T: Real>(
    solution: &ContactForceSolution<T>,
    yaw_rate_des: T,
    model: &RobotModel<T>,
) -> ContactForceSolution<T> {
    let mut out = solution.clone();
    let offset = model.k_turn * yaw_rate_des;
    for f in &mut out.forces {
        let sign = match f.leg.side() {
            Side::Right => T::one(),
            Side::Left => -T::one(),
        };
        f.lambda.x += sign * offset;
    }
    out
}

/// Joint torques realizing the solution's ground reactions. `jacobians` is
/// indexed by [`Leg::index`]; swing legs are absent from the result.
pub fn stance_torques<T: Real>(solution: &ContactForceSolution<T>, jacobians: &[Mat2<T>; 4]) -> Vec<(Leg, Vec2<T>)> {
    solution
        .forces
        .iter()
        .map(|f| {
            let tm = torque_map(&jacobians[f.leg.index()], solution.tangent_b, solution.normal_b);
            (f.leg, tm.mul_vec(f.lambda))
        })
        .collect()
}

/// Checks the three constraint families on a solution.
pub fn constraint_violation<T: Real>(
    solution: &ContactForceSolution<T>,
    jacobians: &[Mat2<T>; 4],
    model: &RobotModel<T>,
) -> T {
    let mut worst = T::zero();
    let torques = stance_torques(solution, jacobians);
    for (f, (_, tau)) in solution.forces.iter().zip(&torques) {
        let (t, n) = (f.lambda.x, f.lambda.y);
        worst = worst
            .max(model.f_min_normal - n)
            .max(t.abs() - model.mu * n)
            .max(tau.x.abs() - model.tau_max)
            .max(tau.y.abs() - model.tau_max);
    }
    worst
}
