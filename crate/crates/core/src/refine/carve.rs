use serde::{Deserialize, Serialize};

use super::{
    fit_with_smoothness, project_to_isosurface, snap_strokes, stroke_vertices, FitParams, ProjectionSchedule,
    RefineError, SNAP_FRACTION,
};
use crate::implicit::OccupancyField;
use crate::mesh::{
    bilateral_normal_filter, k_ring, midpoint_subdivide, BilateralParams, LaplacianKind, MeshQuery, TriMesh,
    VertexRegion,
};
use crate::stroke::Stroke;

pub const DEFAULT_RING_K: usize = 3;

/// Smoothness weight for detail carving; low so fitted details survive.
pub const DETAIL_LAMBDA: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarveParams {
    pub schedule: ProjectionSchedule,
    pub lambda: f64,
    /// Rings around stroke-adjacent vertices that form the target region.
    pub ring_k: usize,
    /// Width of the filtered band around the region.
    pub band_rings: usize,
    pub bilateral: BilateralParams,
    /// Stroke snap tolerance relative to the bbox diagonal.
    pub snap_fraction: f64,
    /// Midpoint-subdivide the region before fitting.
    pub subdivide: bool,
}

impl Default for CarveParams {
    fn default() -> Self {
        Self {
            schedule: ProjectionSchedule::default(),
            lambda: DETAIL_LAMBDA,
            ring_k: DEFAULT_RING_K,
            band_rings: 1,
            bilateral: BilateralParams::default(),
            snap_fraction: SNAP_FRACTION,
            subdivide: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarveOutput {
    pub mesh: TriMesh,
    /// The input after region subdivision, before any vertex moved.
    pub subdivided: TriMesh,
    /// Fitted vertices (indices into `mesh`).
    pub region: VertexRegion,
    /// Filtered vertices around the region.
    pub band: VertexRegion,
}

/// Refines the neighbourhood of on-surface strokes against a detail field:
/// the k-ring region around the strokes is subdivided, projected onto the
/// field's level set and fitted with the detail smoothness weight, then the
/// surrounding band is bilaterally filtered. Vertices outside region and band
/// keep their exact positions and indices.
pub fn carve_details(
    mesh: &TriMesh,
    strokes: &[Stroke],
    field: &dyn OccupancyField,
    params: &CarveParams,
) -> Result<CarveOutput, RefineError> {
    let strokes: Vec<Stroke> = strokes.iter().filter(|s| !s.is_empty()).cloned().collect();
    if strokes.is_empty() {
        return Ok(CarveOutput {
            mesh: mesh.clone(),
            subdivided: mesh.clone(),
            region: VertexRegion::empty(),
            band: VertexRegion::empty(),
        });
    }
    let query = MeshQuery::new(mesh);
    snap_strokes(&query, &strokes, params.snap_fraction * mesh.bbox_diagonal())?;
    let seeds = stroke_vertices(mesh, &query, &strokes);
    let region = VertexRegion::new(mesh, k_ring(mesh, seeds, params.ring_k))?;
    let (sub, region) = if params.subdivide { midpoint_subdivide(mesh, &region)? } else { (mesh.clone(), region) };

    let projection = project_to_isosurface(&sub, field, &params.schedule, Some(&region))?;
    let fit = FitParams { lambda: params.lambda, region: Some(region.clone()), laplacian: LaplacianKind::Uniform };
    let fitted = fit_with_smoothness(&sub, &projection.targets, &fit)?;
    let band = region.band(&fitted, params.band_rings)?;
    let mesh = bilateral_normal_filter(&fitted, &band, &params.bilateral)?;
    Ok(CarveOutput { mesh, subdivided: sub, region, band })
}
