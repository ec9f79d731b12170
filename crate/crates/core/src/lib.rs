//! Sketch-driven mesh modeling guided by occupancy fields.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod camera;
pub mod deform;
pub mod geom;
pub mod implicit;
pub mod linsolve;
pub mod mesh;
pub mod raster;
pub mod refine;
pub mod session;
pub mod silhouette;
pub mod stroke;
