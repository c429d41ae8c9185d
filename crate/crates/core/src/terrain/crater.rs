use serde::{Deserialize, Serialize};

use crate::num::Real;

use super::{ElevationGrid, TerrainError};

/// Synthetic impact crater: parabolic bowl plus a Gaussian rim.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CraterSpec<T> {
    pub diameter: T,
    pub depth: T,
    pub rim_height: T,
    pub center_x: T,
    pub center_y: T,
    pub map_size: T,
    pub cellsize: T,
}

impl<T: Real> Default for CraterSpec<T> {
    fn default() -> Self {
        Self {
            diameter: T::lit(400.0),
            depth: T::lit(70.0),
            rim_height: T::lit(5.0),
            center_x: T::lit(300.0),
            center_y: T::lit(300.0),
            map_size: T::lit(600.0),
            cellsize: T::one(),
        }
    }
}

impl<T: Real> CraterSpec<T> {
    pub fn validate(&self) -> Result<(), TerrainError> {
        let bad = |m: &str| Err(TerrainError::InvalidCrater(m.to_string()));
        if !(self.diameter > T::zero()) {
            return bad("diameter must be positive");
        }
        if !(self.depth > T::zero()) {
            return bad("depth must be positive");
        }
        if !(self.cellsize > T::zero()) {
            return bad("cellsize must be positive");
        }
        if !(self.map_size > self.diameter) {
            return bad("map size must exceed the crater diameter");
        }
        if !(self.rim_height >= T::zero()) || !self.center_x.is_finite() || !self.center_y.is_finite() {
            return bad("rim height must be non-negative and the center finite");
        }
        if self.map_size / self.cellsize < T::two() {
            return bad("map must span at least two cells");
        }
        Ok(())
    }

    /// Height at radial distance `r` from the center.
    pub fn profile(&self, r: T) -> T {
        let radius = self.diameter * T::half();
        let sigma = T::lit(0.1) * self.diameter;
        let dr = r - radius;
        let rim = self.rim_height * (-(dr * dr) / (T::two() * sigma * sigma)).exp();
        if r < radius {
            let u = r / radius;
            -self.depth * (T::one() - u * u) + rim
        } else {
            rim
        }
    }

    /// Radial derivative of the parabolic bowl alone.
    pub fn bowl_slope(&self, r: T) -> T {
        let radius = self.diameter * T::half();
        if r < radius {
            T::two() * self.depth * r / (radius * radius)
        } else {
            T::zero()
        }
    }
}

/// Rasterizes the crater onto a square grid with its lower-left corner at
/// the map origin.
pub fn gen_crater<T: Real>(shape: &CraterSpec<T>) -> Result<ElevationGrid<T>, TerrainError> {
    shape.validate()?;
    let n = (shape.map_size / shape.cellsize)
        .round()
        .to_usize()
        .ok_or_else(|| TerrainError::InvalidCrater("map too large".into()))?;
    ElevationGrid::from_fn(n, n, shape.cellsize, T::zero(), T::zero(), |x, y| {
        shape.profile((x - shape.center_x).hypot(y - shape.center_y))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_center_and_rim() {
        let s = CraterSpec::<f64>::default();
        let expected_center = -70.0 + 5.0 * (-12.5f64).exp();
        assert!((s.profile(0.0) - expected_center).abs() < 1e-12);
        assert!((s.profile(0.0) + 70.0).abs() < 1e-4);
        assert_eq!(s.profile(200.0), 5.0);
        assert!(s.profile(400.0) < 1e-4);
    }

    #[test]
    fn steepest_bowl_slope_is_35_degrees() {
        let s = CraterSpec::<f64>::default();
        // d/dr of -depth (1 - (2r/D)^2) at r = D/2 equals 2 depth / (D/2)
        let analytic = (2.0f64 * 70.0 / 200.0).atan().to_degrees();
        let fd = (s.profile(200.0 - 1e-6) - s.profile(200.0 - 2e-6)) / 1e-6;
        assert!((s.bowl_slope(200.0 - 1e-9).atan().to_degrees() - analytic).abs() < 1e-6);
        assert!((fd - 0.7).abs() < 1e-4);
        assert!((analytic - 34.99).abs() < 0.01);
    }

    #[test]
    fn default_grid_dimensions() {
        let g = gen_crater(&CraterSpec::<f64>::default()).unwrap();
        assert_eq!((g.ncols(), g.nrows()), (600, 600));
        assert!((g.height_at(300.0, 300.0).unwrap() + 70.0).abs() < 1e-3);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let s = CraterSpec::<f64> {
            cellsize: 0.0,
            ..Default::default()
        };
        assert!(gen_crater(&s).is_err());
        let s = CraterSpec::<f64> {
            map_size: 300.0,
            ..Default::default()
        };
        assert!(gen_crater(&s).is_err());
        let s = CraterSpec::<f64> {
            depth: 0.0,
            ..Default::default()
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn radially_symmetric_under_quarter_turns() {
        let s = CraterSpec::<f64> {
            map_size: 120.0,
            diameter: 80.0,
            depth: 14.0,
            center_x: 60.0,
            center_y: 60.0,
            ..Default::default()
        };
        let g = gen_crater(&s).unwrap();
        for (dx, dy) in [(3.3, 17.9), (-20.1, 5.2), (31.7, -30.05), (0.0, 0.0)] {
            let h0 = g.height_at(60.0 + dx, 60.0 + dy).unwrap();
            let h1 = g.height_at(60.0 - dy, 60.0 + dx).unwrap();
            assert!((h0 - h1).abs() < 1e-9, "{h0} vs {h1}");
        }
    }
}
