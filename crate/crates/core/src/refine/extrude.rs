use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};

use super::{snap_strokes, RefineError, SNAP_FRACTION};
use crate::camera::OrthoView;
use crate::geom::Vector;
use crate::mesh::{midpoint_subdivide, ring_distances, MeshQuery, TriMesh, VertexRegion};
use crate::silhouette::point_in_polygon;
use crate::stroke::Stroke;

/// Rings over which the displacement fades in from the region boundary.
pub const BLEND_RINGS: usize = 2;

/// Subdivide while the region's mean edge exceeds profile length over this.
const EDGES_PER_PROFILE: f64 = 16.0;

const MAX_SUBDIVISIONS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtrudeParams {
    /// Snap and closure tolerance relative to the bbox diagonal.
    pub snap_fraction: f64,
}

impl Default for ExtrudeParams {
    fn default() -> Self {
        Self { snap_fraction: SNAP_FRACTION }
    }
}

/// Profile heights over the baseline parameter `s ∈ [0, 1]`.
struct Profile {
    s: Vec<f64>,
    h: Vec<f64>,
}

impl Profile {
    fn height(&self, s: f64) -> f64 {
        let mut best: Option<f64> = None;
        for k in 0..self.s.len().saturating_sub(1) {
            let (s0, s1, h0, h1) = (self.s[k], self.s[k + 1], self.h[k], self.h[k + 1]);
            let (lo, hi) = (s0.min(s1), s0.max(s1));
            if s < lo || s > hi {
                continue;
            }
            let h = if hi > lo { h0 + (h1 - h0) * (s - s0) / (s1 - s0) } else { h0.max(h1) };
            best = Some(best.map_or(h, |b: f64| b.max(h)));
        }
        best.unwrap_or(0.0)
    }
}

/// Raises the surface patch enclosed by a closed on-surface stroke along the
/// patch's mean normal so that, seen through `view`, its outline follows the
/// profile stroke. Heights are measured from the profile's endpoint chord
/// and fade to zero over [`BLEND_RINGS`] rings at the patch boundary.
pub fn extrude(
    mesh: &TriMesh,
    region_stroke: &Stroke,
    profile_stroke: &Stroke,
    view: &OrthoView,
    params: &ExtrudeParams,
) -> Result<TriMesh, RefineError> {
    let tolerance = params.snap_fraction * mesh.bbox_diagonal();
    let query = MeshQuery::new(mesh);
    let hits = snap_strokes(&query, std::slice::from_ref(region_stroke), tolerance)?.remove(0);
    let gap = match (hits.first(), hits.last()) {
        (Some(a), Some(b)) if hits.len() >= 3 => (a.point - b.point).norm(),
        _ => f64::INFINITY,
    };
    if gap > tolerance {
        return Err(RefineError::OpenRegionStroke { gap, tolerance });
    }

    let facing = hits.iter().fold(Vector::zeros(), |acc, h| acc + mesh.face_normal(h.face));
    let facing = facing.try_normalize(1e-12).ok_or(RefineError::EmptyRegion)?;
    let e1 = facing.cross(&if facing.x.abs() < 0.9 { Vector::x() } else { Vector::y() }).normalize();
    let e2 = facing.cross(&e1);
    let flat = |p: &crate::geom::Point| Point2::new(p.coords.dot(&e1), p.coords.dot(&e2));
    let polygon: Vec<Point2<f64>> = hits.iter().map(|h| flat(&h.point)).collect();
    let normals = mesh.vertex_normals();
    let members: Vec<usize> = (0..mesh.vertex_count())
        .filter(|&v| normals[v].dot(&facing) > 0.0 && point_in_polygon(&polygon, &flat(&mesh.positions()[v])))
        .collect();
    if members.is_empty() {
        return Err(RefineError::EmptyRegion);
    }
    let lift = members.iter().fold(Vector::zeros(), |acc, &v| acc + normals[v]);
    let lift = lift.try_normalize(1e-12).unwrap_or(facing);

    let screen: Vec<Point2<f64>> = profile_stroke
        .points
        .iter()
        .map(|p| {
            let v = view.to_view(p);
            Point2::new(v.x, v.y)
        })
        .collect();
    let (q0, q1) = match (screen.first(), screen.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(RefineError::DegenerateProfile),
    };
    let chord = (q1 - q0).norm();
    if !(chord > 1e-12) {
        return Err(RefineError::DegenerateProfile);
    }
    let dir = (q1 - q0) / chord;
    let lift_screen = Vector2::new(lift.dot(&view.right()), lift.dot(&view.up));
    let across = lift_screen - dir * lift_screen.dot(&dir);
    let (perp, gain) = if across.norm() > 1e-6 {
        (across.normalize(), 1.0 / across.norm())
    } else {
        (Vector2::new(-dir.y, dir.x), 1.0)
    };
    let profile = Profile {
        s: screen.iter().map(|q| (q - q0).dot(&dir) / chord).collect(),
        h: screen.iter().map(|q| (q - q0).dot(&perp)).collect(),
    };
    let lowest = profile.h.iter().copied().fold(0.0, f64::min);
    if lowest < -1e-9 * chord {
        return Err(RefineError::ProfileNotRising { depth: -lowest });
    }
    if profile.h.iter().all(|&h| h <= 0.0) {
        return Ok(mesh.clone());
    }

    let mut current = mesh.clone();
    let mut region = VertexRegion::new(mesh, members)?;
    for _ in 0..MAX_SUBDIVISIONS {
        if region_edge_length(&current, &region) <= chord / EDGES_PER_PROFILE {
            break;
        }
        let (m, r) = midpoint_subdivide(&current, &region)?;
        if m.vertex_count() == current.vertex_count() {
            break;
        }
        current = m;
        region = r;
    }

    let outside = (0..current.vertex_count()).filter(|&v| !region.contains(v));
    let rings = ring_distances(&current, outside);
    let mut positions = current.positions().to_vec();
    for &v in region.members() {
        let d = rings[v].min(BLEND_RINGS + 1);
        let w = (d.saturating_sub(1)).min(BLEND_RINGS) as f64 / BLEND_RINGS as f64;
        if w == 0.0 {
            continue;
        }
        let q = view.to_view(&positions[v]);
        let s = (Point2::new(q.x, q.y) - q0).dot(&dir) / chord;
        let h = profile.height(s);
        positions[v] += lift * (h * gain * w);
    }
    Ok(current.with_positions(positions)?)
}

fn region_edge_length(mesh: &TriMesh, region: &VertexRegion) -> f64 {
    let p = mesh.positions();
    let (mut sum, mut count) = (0.0, 0usize);
    for ((a, b), _) in mesh.edges() {
        if region.contains(a) && region.contains(b) {
            sum += (p[a] - p[b]).norm();
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}
