use std::sync::Arc;

use super::{occupancy_from_sdf, FieldError, OccupancyField};
use crate::geom::{Aabb, Point, Vector};
use crate::mesh::{MeshError, MeshQuery, TriMesh};

/// Direction of the inside/outside parity ray. Irrational-looking components
/// keep it off mesh edges for axis-aligned and symmetric inputs.
pub const PARITY_DIRECTION: Vector = Vector::new(0.5772156649015329, 0.6180339887498949, 0.5345224838248488);

/// Distances at or below this fraction of the bbox diagonal count as on the
/// surface (occupancy exactly 0.5).
const SURFACE_SNAP: f64 = 1e-12;

/// Occupancy from the signed distance to a watertight mesh (inside
/// positive): `clamp(0.5 + d_in / w, 0, 1)`.
#[derive(Debug, Clone)]
pub struct MeshField {
    query: MeshQuery,
    falloff: f64,
    bbox: Aabb,
    snap: f64,
}

pub fn mesh_to_field(mesh: &TriMesh, falloff: f64) -> Result<MeshField, FieldError> {
    MeshField::new(Arc::new(mesh.clone()), falloff)
}

impl MeshField {
    pub fn new(mesh: Arc<TriMesh>, falloff: f64) -> Result<Self, FieldError> {
        if !(falloff > 0.0) || !falloff.is_finite() {
            return Err(FieldError::BadFalloff(falloff));
        }
        let open_edges = mesh.boundary_edges().len();
        if open_edges > 0 || mesh.face_count() == 0 {
            return Err(MeshError::NotWatertight { open_edges }.into());
        }
        let bbox = mesh.bbox().ok_or(FieldError::BadBbox)?.expanded(falloff);
        let snap = SURFACE_SNAP * mesh.bbox_diagonal();
        Ok(Self { query: MeshQuery::from_arc(mesh), falloff, bbox, snap })
    }

    pub fn mesh(&self) -> &TriMesh {
        self.query.mesh()
    }

    pub fn falloff(&self) -> f64 {
        self.falloff
    }

    /// Odd number of crossings along [`PARITY_DIRECTION`].
    pub fn is_inside(&self, p: &Point) -> bool {
        let hits = self.query.ray_hits(p, &PARITY_DIRECTION);
        let mut count = 0;
        let mut last = f64::NEG_INFINITY;
        for (t, _) in hits {
            // A ray through a shared edge reports both faces at the same t.
            if t - last > 1e-12 {
                count += 1;
            }
            last = t;
        }
        count % 2 == 1
    }

    /// Signed distance, negative inside.
    pub fn signed_distance(&self, p: &Point) -> f64 {
        let d = self.query.closest_point(p).map_or(f64::INFINITY, |h| h.distance);
        if d <= self.snap {
            return 0.0;
        }
        if self.is_inside(p) {
            -d
        } else {
            d
        }
    }
}

impl OccupancyField for MeshField {
    fn eval(&self, p: &Point) -> f64 {
        occupancy_from_sdf(self.signed_distance(p), self.falloff)
    }

    fn bbox(&self) -> Aabb {
        self.bbox
    }
}
