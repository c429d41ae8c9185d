//! Frames, rotations, planar poses and Dubins paths.

mod dubins;
mod rotation;
mod se2;

pub use dubins::{dubins_candidates, dubins_shortest, DubinsPath, DubinsType, Segment};
pub use rotation::{boxminus, Rotation3};
pub use se2::{normalize_angle, Se2State};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeomError {
    #[error("turning radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("arclength {s} outside path of length {length}")]
    ArcLengthOutOfRange { s: f64, length: f64 },
    #[error("no Dubins word exists for this configuration")]
    NoDubinsPath,
}
