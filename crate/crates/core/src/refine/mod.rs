//! Fitting explicit meshes to occupancy fields: per-vertex isosurface walks
//! along frozen normals, smoothness-regularized least squares, and the
//! region-restricted operations built on them (detail carving, extrusion).

mod carve;
mod extrude;
mod fit;
mod projection;

use thiserror::Error;

use crate::implicit::FieldError;
use crate::linsolve::SolveError;
use crate::mesh::{MeshError, MeshQuery, SurfaceHit, TriMesh};
use crate::stroke::Stroke;

pub use carve::{carve_details, CarveOutput, CarveParams, DEFAULT_RING_K, DETAIL_LAMBDA};
pub use extrude::{extrude, ExtrudeParams, BLEND_RINGS};
pub use fit::{fit_energy, fit_with_smoothness, refine_coarse, CoarseParams, FitParams, COARSE_LAMBDA, COARSE_ROUNDS};
pub use projection::{
    project_points, project_to_isosurface, Projection, ProjectionSchedule, StepSign, ALPHA, ITERATIONS, STEP0,
    STEP_RATIO,
};

/// Snap tolerance for on-surface strokes, relative to the mesh bbox diagonal.
pub const SNAP_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RefineError {
    #[error("invalid projection schedule: {0}")]
    BadSchedule(&'static str),
    #[error("smoothness weight must be finite and non-negative, got {0}")]
    BadLambda(f64),
    #[error("{expected} targets expected, {found} given")]
    TargetCount { expected: usize, found: usize },
    #[error("target {index} is not finite")]
    NonFiniteTarget { index: usize },
    #[error("stroke {stroke} point {point} is {distance:e} from the surface (tolerance {tolerance:e})")]
    OffSurface { stroke: usize, point: usize, distance: f64, tolerance: f64 },
    #[error("region stroke is not closed: endpoint gap {gap:e} exceeds {tolerance:e}")]
    OpenRegionStroke { gap: f64, tolerance: f64 },
    #[error("region stroke encloses no vertices")]
    EmptyRegion,
    #[error("profile dips {depth:e} below the region boundary")]
    ProfileNotRising { depth: f64 },
    #[error("profile stroke needs two distinct screen points")]
    DegenerateProfile,
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Snaps every point of every stroke to the surface; a point farther than
/// `tolerance` is an error naming the stroke and point.
pub fn snap_strokes(
    query: &MeshQuery,
    strokes: &[Stroke],
    tolerance: f64,
) -> Result<Vec<Vec<SurfaceHit>>, RefineError> {
    strokes
        .iter()
        .enumerate()
        .map(|(s, stroke)| {
            stroke
                .points
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let hit = query.closest_point(p).ok_or(RefineError::EmptyRegion)?;
                    if hit.distance > tolerance {
                        return Err(RefineError::OffSurface { stroke: s, point: i, distance: hit.distance, tolerance });
                    }
                    Ok(hit)
                })
                .collect()
        })
        .collect()
}

/// Vertices of the faces under densified stroke samples.
pub(crate) fn stroke_vertices(mesh: &TriMesh, query: &MeshQuery, strokes: &[Stroke]) -> Vec<usize> {
    let spacing = mesh.mean_edge_length() * 0.5;
    let mut out = Vec::new();
    for s in strokes {
        for p in s.densify(spacing) {
            if let Some(hit) = query.closest_point(&p) {
                out.extend(mesh.faces()[hit.face]);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}
