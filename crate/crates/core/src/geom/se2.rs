use serde::{Deserialize, Serialize};

use crate::num::Real;

/// Wraps an angle into the half-open interval `[-π, π)`.
pub fn normalize_angle<T: Real>(a: T) -> T {
    let tau = T::TAU();
    let pi = T::PI();
    let mut r = a - tau * ((a + pi) / tau).floor();
    // floor() rounding can land exactly on +π or slightly below -π
    if r >= pi {
        r -= tau;
    }
    if r < -pi {
        r += tau;
    }
    r
}

/// Planar pose `(x, y, θ)` in the map frame; θ is kept in `[-π, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Se2State<T> {
    pub x: T,
    pub y: T,
    pub theta: T,
}

impl<T: Real> Se2State<T> {
    pub fn new(x: T, y: T, theta: T) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn distance(&self, o: &Self) -> T {
        (self.x - o.x).hypot(self.y - o.y)
    }

    /// Absolute heading difference, in `[0, π]`.
    pub fn heading_error(&self, o: &Self) -> T {
        normalize_angle(self.theta - o.theta).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn pi_maps_to_minus_pi() {
        assert_eq!(normalize_angle(PI), -PI);
        assert_eq!(normalize_angle(-PI), -PI);
        assert_eq!(normalize_angle(0.0), 0.0);
        assert!((normalize_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn normalized_angle_is_half_open_and_equivalent(a in -100.0..100.0f64) {
            let n = normalize_angle(a);
            prop_assert!((-PI..PI).contains(&n));
            prop_assert!(((a - n) / (2.0 * PI)).round() * 2.0 * PI - (a - n) < 1e-9);
        }
    }
}
