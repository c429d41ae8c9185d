//! Digital terrain models: storage, ESRI ASCII I/O, synthetic craters and
//! slope queries.

mod crater;
mod esri;
mod grid;

pub use crater::{gen_crater, CraterSpec};
pub use esri::{format_significant, load_esri_ascii, write_esri_ascii};
pub use grid::ElevationGrid;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TerrainError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("query ({x}, {y}) is outside the grid")]
    OutOfBounds { x: f64, y: f64 },
    #[error("query ({x}, {y}) touches a NODATA cell")]
    NoData { x: f64, y: f64 },
    #[error("invalid crater shape: {0}")]
    InvalidCrater(String),
}
