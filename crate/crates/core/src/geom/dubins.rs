//! Forward-only shortest paths under a minimum turning radius.
//!
//! Word formulas follow the standard normalized construction: the problem is
//! rotated and scaled so the start sits at the origin and the turning radius
//! is one, each candidate word yields three segment parameters `(t, p, q)`,
//! and the shortest existing word wins.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::se2::{normalize_angle, Se2State};
use super::GeomError;
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Segment {
    Left,
    Straight,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DubinsType {
    Lsl,
    Rsr,
    Lsr,
    Rsl,
    Rlr,
    Lrl,
}

impl DubinsType {
    pub const ALL: [DubinsType; 6] = [
        DubinsType::Lsl,
        DubinsType::Rsr,
        DubinsType::Lsr,
        DubinsType::Rsl,
        DubinsType::Rlr,
        DubinsType::Lrl,
    ];

    pub fn segments(self) -> [Segment; 3] {
        use Segment::*;
        match self {
            DubinsType::Lsl => [Left, Straight, Left],
            DubinsType::Rsr => [Right, Straight, Right],
            DubinsType::Lsr => [Left, Straight, Right],
            DubinsType::Rsl => [Right, Straight, Left],
            DubinsType::Rlr => [Right, Left, Right],
            DubinsType::Lrl => [Left, Right, Left],
        }
    }
}

impl fmt::Display for DubinsType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DubinsType::Lsl => "LSL",
            DubinsType::Rsr => "RSR",
            DubinsType::Lsr => "LSR",
            DubinsType::Rsl => "RSL",
            DubinsType::Rlr => "RLR",
            DubinsType::Lrl => "LRL",
        };
        f.write_str(s)
    }
}

/// A three-segment Dubins path. Segment parameters are stored normalized by
/// the turning radius (radians for arcs); accessors report meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DubinsPath<T> {
    path_type: DubinsType,
    params: [T; 3],
    radius: T,
    start: Se2State<T>,
}

/// Angle modulo 2π in `[0, 2π)`, snapping values within rounding of 2π to 0.
fn mod2pi<T: Real>(a: T) -> T {
    let tau = T::TAU();
    let r = a - tau * (a / tau).floor();
    if r >= tau - T::epsilon() * T::lit(64.0) {
        T::zero()
    } else {
        r.max(T::zero())
    }
}

struct Normalized<T> {
    alpha: T,
    beta: T,
    d: T,
    sa: T,
    sb: T,
    ca: T,
    cb: T,
    c_ab: T,
}

impl<T: Real> Normalized<T> {
    fn new(start: &Se2State<T>, goal: &Se2State<T>, radius: T) -> Self {
        let dx = goal.x - start.x;
        let dy = goal.y - start.y;
        let d = dx.hypot(dy) / radius;
        let th = if d > T::zero() { mod2pi(dy.atan2(dx)) } else { T::zero() };
        let alpha = mod2pi(start.theta - th);
        let beta = mod2pi(goal.theta - th);
        let (sa, ca) = alpha.sin_cos();
        let (sb, cb) = beta.sin_cos();
        Self {
            alpha,
            beta,
            d,
            sa,
            sb,
            ca,
            cb,
            c_ab: (alpha - beta).cos(),
        }
    }

    /// `sqrt` of a squared length, tolerating rounding just below zero.
    fn root(p_sq: T) -> Option<T> {
        let tol = T::epsilon() * T::lit(1024.0);
        if p_sq < -tol {
            None
        } else {
            Some(p_sq.max(T::zero()).sqrt())
        }
    }

    fn word(&self, ty: DubinsType) -> Option<[T; 3]> {
        let Normalized {
            alpha: a,
            beta: b,
            d,
            sa,
            sb,
            ca,
            cb,
            c_ab,
        } = *self;
        let two = T::two();
        match ty {
            DubinsType::Lsl => {
                let tmp0 = d + sa - sb;
                let p = Self::root(two + d * d - two * c_ab + two * d * (sa - sb))?;
                let tmp1 = (cb - ca).atan2(tmp0);
                Some([mod2pi(tmp1 - a), p, mod2pi(b - tmp1)])
            }
            DubinsType::Rsr => {
                let tmp0 = d - sa + sb;
                let p = Self::root(two + d * d - two * c_ab + two * d * (sb - sa))?;
                let tmp1 = (ca - cb).atan2(tmp0);
                Some([mod2pi(a - tmp1), p, mod2pi(tmp1 - b)])
            }
            DubinsType::Lsr => {
                let p = Self::root(-two + d * d + two * c_ab + two * d * (sa + sb))?;
                let tmp0 = (-ca - cb).atan2(d + sa + sb) - (-two).atan2(p);
                Some([mod2pi(tmp0 - a), p, mod2pi(tmp0 - b)])
            }
            DubinsType::Rsl => {
                let p = Self::root(-two + d * d + two * c_ab - two * d * (sa + sb))?;
                let tmp0 = (ca + cb).atan2(d - sa - sb) - two.atan2(p);
                Some([mod2pi(a - tmp0), p, mod2pi(b - tmp0)])
            }
            DubinsType::Rlr => {
                let tmp0 = (T::lit(6.0) - d * d + two * c_ab + two * d * (sa - sb)) / T::lit(8.0);
                if tmp0.abs() > T::one() {
                    return None;
                }
                let phi = (ca - cb).atan2(d - sa + sb);
                let p = mod2pi(T::TAU() - tmp0.acos());
                let t = mod2pi(a - phi + mod2pi(p / two));
                Some([t, p, mod2pi(a - b - t + mod2pi(p))])
            }
            DubinsType::Lrl => {
                let tmp0 = (T::lit(6.0) - d * d + two * c_ab + two * d * (sb - sa)) / T::lit(8.0);
                if tmp0.abs() > T::one() {
                    return None;
                }
                let phi = (ca - cb).atan2(d + sa - sb);
                let p = mod2pi(T::TAU() - tmp0.acos());
                let t = mod2pi(-a - phi + p / two);
                Some([t, p, mod2pi(b - a - t + mod2pi(p))])
            }
        }
    }
}

fn check_radius<T: Real>(radius: T) -> Result<(), GeomError> {
    if radius > T::zero() && radius.is_finite() {
        Ok(())
    } else {
        Err(GeomError::InvalidRadius(radius.to_f64_lossy()))
    }
}

/// Every candidate word that exists for the configuration.
pub fn dubins_candidates<T: Real>(
    start: Se2State<T>,
    goal: Se2State<T>,
    radius: T,
) -> Result<Vec<DubinsPath<T>>, GeomError> {
    check_radius(radius)?;
    let n = Normalized::new(&start, &goal, radius);
    Ok(DubinsType::ALL
        .iter()
        .filter_map(|&ty| {
            n.word(ty).map(|params| DubinsPath {
                path_type: ty,
                params,
                radius,
                start,
            })
        })
        .collect())
}

/// Minimum-length Dubins path between two poses.
pub fn dubins_shortest<T: Real>(start: Se2State<T>, goal: Se2State<T>, radius: T) -> Result<DubinsPath<T>, GeomError> {
    dubins_candidates(start, goal, radius)?
        .into_iter()
        .min_by(|a, b| a.normalized_length().partial_cmp(&b.normalized_length()).unwrap())
        .ok_or(GeomError::NoDubinsPath)
}

/// Pose after travelling `t` (normalized units) along one segment from `q`,
/// with the start at the origin and unit radius.
fn segment_step<T: Real>(t: T, q: [T; 3], seg: Segment) -> [T; 3] {
    let [x, y, th] = q;
    match seg {
        Segment::Left => [x + (th + t).sin() - th.sin(), y - (th + t).cos() + th.cos(), th + t],
        Segment::Right => [x - (th - t).sin() + th.sin(), y + (th - t).cos() - th.cos(), th - t],
        Segment::Straight => [x + th.cos() * t, y + th.sin() * t, th],
    }
}

impl<T: Real> DubinsPath<T> {
    pub fn path_type(&self) -> DubinsType {
        self.path_type
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn start(&self) -> Se2State<T> {
        self.start
    }

    /// Segment parameters normalized by the radius.
    pub fn normalized_params(&self) -> [T; 3] {
        self.params
    }

    /// Segment lengths in meters.
    pub fn segment_lengths(&self) -> [T; 3] {
        self.params.map(|p| p * self.radius)
    }

    fn normalized_length(&self) -> T {
        self.params[0] + self.params[1] + self.params[2]
    }

    pub fn length(&self) -> T {
        self.normalized_length() * self.radius
    }

    /// Pose at arclength `s` meters from the start.
    pub fn sample(&self, s: T) -> Result<Se2State<T>, GeomError> {
        let len = self.length();
        let slack = T::epsilon() * T::lit(16.0) * (T::one() + len);
        if !(s >= -slack && s <= len + slack) {
            return Err(GeomError::ArcLengthOutOfRange {
                s: s.to_f64_lossy(),
                length: len.to_f64_lossy(),
            });
        }
        Ok(self.sample_unchecked(s.clamp_to(T::zero(), len)))
    }

    fn sample_unchecked(&self, s: T) -> Se2State<T> {
        let tprime = s / self.radius;
        let segs = self.path_type.segments();
        let [p0, p1, _] = self.params;
        let origin = [T::zero(), T::zero(), self.start.theta];
        let q = if tprime < p0 {
            segment_step(tprime, origin, segs[0])
        } else {
            let q1 = segment_step(p0, origin, segs[0]);
            if tprime < p0 + p1 {
                segment_step(tprime - p0, q1, segs[1])
            } else {
                let q2 = segment_step(p1, q1, segs[1]);
                segment_step(tprime - p0 - p1, q2, segs[2])
            }
        };
        Se2State::new(
            q[0] * self.radius + self.start.x,
            q[1] * self.radius + self.start.y,
            normalize_angle(q[2]),
        )
    }

    /// Final pose of the path.
    pub fn end(&self) -> Se2State<T> {
        self.sample_unchecked(self.length())
    }

    /// Prefix of the path up to arclength `s` (clamped to the path length).
    pub fn truncated(&self, s: T) -> Self {
        let mut rest = (s / self.radius).max(T::zero());
        let mut params = self.params;
        for p in params.iter_mut() {
            let take = rest.min(*p);
            *p = take;
            rest -= take;
        }
        Self { params, ..*self }
    }
}
