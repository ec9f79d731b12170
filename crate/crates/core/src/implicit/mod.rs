//! Occupancy fields `p → [0, 1]` (1 inside, 0 outside, surface at 0.5) and
//! the sampling utilities that feed them.
//!
//! Providers: [`AnalyticField`] (signed-distance primitives with smooth
//! blends), [`GridField`] (trilinear lattice, file interchange with external
//! predictors) and [`MeshField`] (signed distance to a watertight mesh).

mod analytic;
mod grid;
mod mesh_field;
mod sampling;
mod voxel;

use thiserror::Error;

use crate::geom::{Aabb, Point};
use crate::mesh::MeshError;

pub use analytic::{smooth_max, smooth_min, AnalyticField, AnalyticSpec, Shape};
pub use grid::{load_grid, read_grid, save_grid, write_grid, GridField, GRID_MAGIC, GRID_VERSION};
pub use mesh_field::{mesh_to_field, MeshField, PARITY_DIRECTION};
pub use sampling::{sample_points, SampleSet};
pub use voxel::{stroke_bbox, voxelize_strokes, voxelize_strokes_in, VoxelGrid, DEFAULT_RESOLUTION, STROKE_SAMPLES};

/// Default isosurface level.
pub const ALPHA: f64 = 0.5;

/// Falloff width relative to the bbox diagonal for analytic use.
pub const ANALYTIC_FALLOFF_FRACTION: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("falloff width must be positive, got {0}")]
    BadFalloff(f64),
    #[error("grid dimensions must be at least 2 per axis, got {0:?}")]
    BadDims([usize; 3]),
    #[error("grid has {found} values for dimensions {dims:?}")]
    ValueCount { dims: [usize; 3], found: usize },
    #[error("grid value {value} at {index} outside [0, 1]")]
    ValueRange { index: usize, value: f32 },
    #[error("degenerate bounding box")]
    BadBbox,
    #[error("not a grid field file: {0}")]
    Format(String),
    #[error("unsupported grid file version {0}")]
    Version(u32),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("no strokes to voxelize")]
    NoStrokes,
    #[error("sample count or fraction invalid: n = {n}, near_fraction = {near_fraction}")]
    BadSampling { n: usize, near_fraction: f64 },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

impl From<std::io::Error> for FieldError {
    fn from(e: std::io::Error) -> Self {
        FieldError::Io(e.to_string())
    }
}

/// A deterministic occupancy function. `eval` is total on all of space;
/// `bbox` is the domain in which the provider is meaningful.
pub trait OccupancyField: Send + Sync {
    fn eval(&self, p: &Point) -> f64;
    fn bbox(&self) -> Aabb;
}

impl<F: OccupancyField + ?Sized> OccupancyField for std::sync::Arc<F> {
    fn eval(&self, p: &Point) -> f64 {
        (**self).eval(p)
    }

    fn bbox(&self) -> Aabb {
        (**self).bbox()
    }
}

impl<F: OccupancyField + ?Sized> OccupancyField for Box<F> {
    fn eval(&self, p: &Point) -> f64 {
        (**self).eval(p)
    }

    fn bbox(&self) -> Aabb {
        (**self).bbox()
    }
}

/// Maps a signed distance (negative inside) to occupancy with width `w`.
pub fn occupancy_from_sdf(sdf: f64, w: f64) -> f64 {
    (0.5 - sdf / w).clamp(0.0, 1.0)
}
