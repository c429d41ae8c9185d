use crate::geom::Se2State;
use crate::linalg::Vec2;
use crate::num::Real;

use super::TerrainError;

/// Regular height field. Samples sit at cell centers; row 0 is the southern
/// row, so `height(col, row)` grows in +x with `col` and +y with `row`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElevationGrid<T> {
    ncols: usize,
    nrows: usize,
    cellsize: T,
    origin_x: T,
    origin_y: T,
    heights: Vec<T>,
    nodata: Option<T>,
}

impl<T: Real> ElevationGrid<T> {
    /// Builds a grid from heights ordered south row first.
    pub fn new(
        ncols: usize,
        nrows: usize,
        cellsize: T,
        origin_x: T,
        origin_y: T,
        heights: Vec<T>,
        nodata: Option<T>,
    ) -> Result<Self, TerrainError> {
        if ncols < 2 || nrows < 2 {
            return Err(TerrainError::InvalidGrid(format!(
                "grid must be at least 2x2, got {ncols}x{nrows}"
            )));
        }
        if !(cellsize > T::zero()) || !cellsize.is_finite() {
            return Err(TerrainError::InvalidGrid(format!(
                "cellsize must be positive, got {cellsize}"
            )));
        }
        if heights.len() != ncols * nrows {
            return Err(TerrainError::InvalidGrid(format!(
                "expected {} heights, got {}",
                ncols * nrows,
                heights.len()
            )));
        }
        Ok(Self {
            ncols,
            nrows,
            cellsize,
            origin_x,
            origin_y,
            heights,
            nodata,
        })
    }

    /// Samples `f(x, y)` at every cell center.
    pub fn from_fn(
        ncols: usize,
        nrows: usize,
        cellsize: T,
        origin_x: T,
        origin_y: T,
        f: impl Fn(T, T) -> T,
    ) -> Result<Self, TerrainError> {
        let mut heights = Vec::with_capacity(ncols * nrows);
        for row in 0..nrows {
            for col in 0..ncols {
                let (x, y) = node_xy(origin_x, origin_y, cellsize, col, row);
                heights.push(f(x, y));
            }
        }
        Self::new(ncols, nrows, cellsize, origin_x, origin_y, heights, None)
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn cellsize(&self) -> T {
        self.cellsize
    }

    /// Lower-left corner of the grid extent.
    pub fn origin(&self) -> (T, T) {
        (self.origin_x, self.origin_y)
    }

    pub fn nodata(&self) -> Option<T> {
        self.nodata
    }

    /// Map coordinates of the sample at `(col, row)`.
    pub fn node_xy(&self, col: usize, row: usize) -> (T, T) {
        node_xy(self.origin_x, self.origin_y, self.cellsize, col, row)
    }

    /// Raw stored value, sentinel included.
    pub fn raw(&self, col: usize, row: usize) -> T {
        self.heights[row * self.ncols + col]
    }

    /// Sample value, `None` for NODATA cells.
    pub fn sample(&self, col: usize, row: usize) -> Option<T> {
        let v = self.raw(col, row);
        if v.is_nan() || self.nodata == Some(v) {
            None
        } else {
            Some(v)
        }
    }

    /// Heights ordered south row first.
    pub fn heights(&self) -> &[T] {
        &self.heights
    }

    /// Extent `(x_min, x_max, y_min, y_max)` of the interpolation domain
    /// (the hull of the sample points).
    pub fn node_bounds(&self) -> (T, T, T, T) {
        let (x0, y0) = self.node_xy(0, 0);
        let (x1, y1) = self.node_xy(self.ncols - 1, self.nrows - 1);
        (x0, x1, y0, y1)
    }

    /// True when `heading_slope` can be evaluated at `(x, y)` as far as
    /// bounds are concerned (one cell of margin inside the sample hull).
    pub fn contains_with_margin(&self, x: T, y: T) -> bool {
        let (x0, x1, y0, y1) = self.node_bounds();
        let c = self.cellsize;
        x >= x0 + c && x <= x1 - c && y >= y0 + c && y <= y1 - c
    }

    fn fractional_index(&self, v: T, origin: T, n: usize) -> Option<(usize, T)> {
        let mut f = (v - origin) / self.cellsize - T::half();
        let last = T::lit((n - 1) as f64);
        let snap = T::epsilon() * T::lit(64.0) * (T::one() + f.abs());
        let r = f.round();
        if (f - r).abs() <= snap {
            f = r;
        }
        if !(f >= T::zero() && f <= last) {
            return None;
        }
        let i = f.floor().to_usize().unwrap_or(0).min(n - 2);
        Some((i, f - T::lit(i as f64)))
    }

    /// Bilinear interpolation of the four surrounding samples.
    pub fn height_at(&self, x: T, y: T) -> Result<T, TerrainError> {
        let oob = || TerrainError::OutOfBounds {
            x: x.to_f64_lossy(),
            y: y.to_f64_lossy(),
        };
        let (i, tx) = self.fractional_index(x, self.origin_x, self.ncols).ok_or_else(oob)?;
        let (j, ty) = self.fractional_index(y, self.origin_y, self.nrows).ok_or_else(oob)?;
        let nd = || TerrainError::NoData {
            x: x.to_f64_lossy(),
            y: y.to_f64_lossy(),
        };
        let h00 = self.sample(i, j).ok_or_else(nd)?;
        let h10 = self.sample(i + 1, j).ok_or_else(nd)?;
        let h01 = self.sample(i, j + 1).ok_or_else(nd)?;
        let h11 = self.sample(i + 1, j + 1).ok_or_else(nd)?;
        let south = lerp(h00, h10, tx);
        let north = lerp(h01, h11, tx);
        Ok(lerp(south, north, ty))
    }

    /// Height gradient by central differences, one cell each side.
    pub fn gradient(&self, x: T, y: T) -> Result<Vec2<T>, TerrainError> {
        let c = self.cellsize;
        let two_c = T::two() * c;
        let dx = (self.height_at(x + c, y)? - self.height_at(x - c, y)?) / two_c;
        let dy = (self.height_at(x, y + c)? - self.height_at(x, y - c)?) / two_c;
        Ok(Vec2::new(dx, dy))
    }

    /// Terrain inclination along the heading, degrees; positive is uphill.
    pub fn heading_slope(&self, state: &Se2State<T>) -> Result<T, TerrainError> {
        let g = self.gradient(state.x, state.y)?;
        let (s, c) = state.theta.sin_cos();
        Ok(g.dot(Vec2::new(c, s)).atan().to_degrees())
    }

    /// Steepest inclination at a point, degrees.
    pub fn max_slope(&self, x: T, y: T) -> Result<T, TerrainError> {
        Ok(self.gradient(x, y)?.norm().atan().to_degrees())
    }
}

/// Exact at both ends: `t = 0` gives `a`, `t = 1` gives `b`.
fn lerp<T: Real>(a: T, b: T, t: T) -> T {
    a * (T::one() - t) + b * t
}

fn node_xy<T: Real>(ox: T, oy: T, cs: T, col: usize, row: usize) -> (T, T) {
    (
        ox + (T::lit(col as f64) + T::half()) * cs,
        oy + (T::lit(row as f64) + T::half()) * cs,
    )
}
