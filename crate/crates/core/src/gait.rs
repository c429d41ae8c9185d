//! Timing-based gait scheduling and swing foot trajectories.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::kinematics::Side;
use crate::linalg::Vec2;
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Leg {
    LF,
    RF,
    LH,
    RH,
}

impl Leg {
    pub const ALL: [Leg; 4] = [Leg::LF, Leg::RF, Leg::LH, Leg::RH];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn side(self) -> Side {
        match self {
            Leg::LF | Leg::LH => Side::Left,
            Leg::RF | Leg::RH => Side::Right,
        }
    }

    pub fn is_front(self) -> bool {
        matches!(self, Leg::LF | Leg::RF)
    }

    /// The other leg of the same diagonal pair.
    pub fn diagonal(self) -> Leg {
        match self {
            Leg::LF => Leg::RH,
            Leg::RH => Leg::LF,
            Leg::RF => Leg::LH,
            Leg::LH => Leg::RF,
        }
    }
}

impl fmt::Display for Leg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaitKind {
    StaticWalk,
    Trot,
}

impl fmt::Display for GaitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GaitKind::StaticWalk => "static_walk",
            GaitKind::Trot => "trot",
        })
    }
}

impl FromStr for GaitKind {
    type Err = GaitError;
    fn from_str(s: &str) -> Result<Self, GaitError> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "static_walk" | "static" | "walk" => Ok(GaitKind::StaticWalk),
            "trot" => Ok(GaitKind::Trot),
            other => Err(GaitError::UnknownGait(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GaitError {
    #[error("unknown gait `{0}` (expected static_walk or trot)")]
    UnknownGait(String),
    #[error("invalid gait schedule: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitSchedule<T> {
    pub name: GaitKind,
    pub cycle_time: T,
    pub duty_factor: T,
    /// Indexed by [`Leg::index`].
    pub phase_offsets: [T; 4],
    pub foot_apogee: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LegPhase {
    Stance,
    Swing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactAssignment<T> {
    pub state: [LegPhase; 4],
    /// Progress through the current stance or swing interval, in [0, 1].
    pub phase: [T; 4],
}

impl<T: Real> ContactAssignment<T> {
    pub fn in_stance(&self, leg: Leg) -> bool {
        self.state[leg.index()] == LegPhase::Stance
    }

    pub fn stance_count(&self) -> usize {
        self.state.iter().filter(|s| **s == LegPhase::Stance).count()
    }

    pub fn stance_legs(&self) -> impl Iterator<Item = Leg> + '_ {
        Leg::ALL.into_iter().filter(|l| self.in_stance(*l))
    }
}

/// Result of [`step_length_for`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLength<T> {
    pub length: T,
    pub clamped: bool,
}

impl<T: Real> GaitSchedule<T> {
    /// Crawl with legs lifting in the order LH, RF, RH, LF.
    pub fn static_walk() -> Self {
        Self {
            name: GaitKind::StaticWalk,
            cycle_time: T::lit(2.5),
            duty_factor: T::lit(0.86),
            phase_offsets: [T::zero(), T::lit(0.5), T::lit(0.75), T::lit(0.25)],
            foot_apogee: T::lit(0.15),
        }
    }

    /// Static walk with the offsets reassigned so the legs lift in the
    /// lateral sequence LH, LF, RH, RF. Each swing then needs the torso on
    /// the far side of a support diagonal that lies ahead of the previous
    /// one, so the fore-aft sway never reverses against the walking direction.
    pub fn static_walk_lateral() -> Self {
        Self {
            phase_offsets: [T::half(), T::zero(), T::lit(0.75), T::lit(0.25)],
            ..Self::static_walk()
        }
    }

    pub fn trot() -> Self {
        Self {
            name: GaitKind::Trot,
            cycle_time: T::lit(0.7),
            duty_factor: T::lit(0.70),
            phase_offsets: [T::zero(), T::half(), T::half(), T::zero()],
            foot_apogee: T::lit(0.10),
        }
    }

    pub fn for_kind(kind: GaitKind) -> Self {
        match kind {
            GaitKind::StaticWalk => Self::static_walk(),
            GaitKind::Trot => Self::trot(),
        }
    }

    pub fn offset(&self, leg: Leg) -> T {
        self.phase_offsets[leg.index()]
    }

    pub fn validate(&self) -> Result<(), GaitError> {
        let bad = |m: String| Err(GaitError::Invalid(m));
        if !(self.cycle_time > T::zero()) {
            return bad(format!("cycle_time must be positive, got {}", self.cycle_time));
        }
        if !(self.duty_factor > T::zero() && self.duty_factor <= T::one()) {
            return bad(format!("duty_factor must lie in (0, 1], got {}", self.duty_factor));
        }
        if self.phase_offsets.iter().any(|o| !(*o >= T::zero() && *o < T::one())) {
            return bad("phase offsets must lie in [0, 1)".into());
        }
        if !(self.foot_apogee >= T::zero()) {
            return bad("foot_apogee must be non-negative".into());
        }
        Ok(())
    }

    /// Gait cycle fraction of `leg` at time `t`, in [0, 1).
    pub fn cycle_phase(&self, leg: Leg, t: T) -> T {
        let p = t / self.cycle_time + self.offset(leg);
        let f = p - p.floor();
        if f >= T::one() {
            T::zero()
        } else {
            f
        }
    }

    pub fn swing_duration(&self) -> T {
        (T::one() - self.duty_factor) * self.cycle_time
    }

    pub fn stance_duration(&self) -> T {
        self.duty_factor * self.cycle_time
    }
}

pub fn contact_state<T: Real>(schedule: &GaitSchedule<T>, t: T) -> ContactAssignment<T> {
    let mut state = [LegPhase::Stance; 4];
    let mut phase = [T::zero(); 4];
    let d = schedule.duty_factor;
    for leg in Leg::ALL {
        let f = schedule.cycle_phase(leg, t);
        let i = leg.index();
        if f < d {
            phase[i] = f / d;
        } else {
            state[i] = LegPhase::Swing;
            phase[i] = ((f - d) / (T::one() - d)).min(T::one());
        }
    }
    ContactAssignment { state, phase }
}

fn smoothstep<T: Real>(s: T) -> T {
    s * s * (T::lit(3.0) - T::two() * s)
}

/// Swing target from `start` to `end` (hip frame, `y` is height): smoothstep
/// advance and sinusoidal lift above the straight chord.
pub fn swing_trajectory_to<T: Real>(
    schedule: &GaitSchedule<T>,
    swing_phase: T,
    start: Vec2<T>,
    end: Vec2<T>,
) -> Vec2<T> {
    let s = swing_phase.clamp_to(T::zero(), T::one());
    if s == T::zero() {
        return start;
    }
    if s == T::one() {
        return end;
    }
    let w = smoothstep(s);
    let base = start.scale(T::one() - w) + end.scale(w);
    base + Vec2::new(T::zero(), schedule.foot_apogee * (T::PI() * s).sin())
}

/// Swing target moving `step_length` forward at constant ground height.
pub fn swing_trajectory<T: Real>(
    schedule: &GaitSchedule<T>,
    swing_phase: T,
    start: Vec2<T>,
    step_length: T,
) -> Vec2<T> {
    swing_trajectory_to(schedule, swing_phase, start, start + Vec2::new(step_length, T::zero()))
}

/// Step length for a commanded forward speed, saturated at `max_step`.
pub fn step_length_for<T: Real>(schedule: &GaitSchedule<T>, v_desired: T, max_step: T) -> StepLength<T> {
    let raw = v_desired.max(T::zero()) * schedule.cycle_time;
    if raw > max_step {
        StepLength {
            length: max_step,
            clamped: true,
        }
    } else {
        StepLength {
            length: raw,
            clamped: false,
        }
    }
}
