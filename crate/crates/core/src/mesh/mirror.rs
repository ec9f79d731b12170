use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{MeshError, TriMesh};
use crate::geom::{Point, Vector};

/// Boundary vertices may sit this far (relative to the bbox diagonal) off the plane.
pub const PLANE_TOLERANCE: f64 = 1e-6;

/// A reflection plane through `point` with unit `normal`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorPlane {
    pub point: Point,
    pub normal: Vector,
}

impl MirrorPlane {
    pub fn new(point: Point, normal: Vector) -> Self {
        Self { point, normal: normal.normalize() }
    }

    /// The sketch plane `z = 0`.
    pub fn xy() -> Self {
        Self { point: Point::origin(), normal: Vector::z() }
    }

    pub fn signed_distance(&self, p: &Point) -> f64 {
        (p - self.point).dot(&self.normal)
    }

    pub fn reflect(&self, p: &Point) -> Point {
        p - self.normal * (2.0 * self.signed_distance(p))
    }

    pub fn reflect_vector(&self, v: &Vector) -> Vector {
        v - self.normal * (2.0 * v.dot(&self.normal))
    }

    pub fn project(&self, p: &Point) -> Point {
        p - self.normal * self.signed_distance(p)
    }
}

/// Closes an open half-mesh by reflecting it across `plane` and welding the
/// shared boundary loop once.
///
/// Output vertex layout: the half's vertices (boundary snapped onto the plane)
/// followed by reflections of its non-boundary vertices in index order.
pub fn mirror_weld(half: &TriMesh, plane: &MirrorPlane) -> Result<TriMesh, MeshError> {
    let boundary = half.boundary_edges();
    let loops = count_loops(&boundary)?;
    if loops != 1 {
        return Err(MeshError::BoundaryLoops { loops });
    }
    if let Some(&(a, b)) = super::subdivide::boundary_chords(half).first() {
        return Err(MeshError::BoundaryChord { a, b });
    }
    let tolerance = PLANE_TOLERANCE * half.bbox_diagonal();
    let mut on_boundary = vec![false; half.vertex_count()];
    for &(a, _) in &boundary {
        on_boundary[a] = true;
    }
    let deviation = (0..half.vertex_count())
        .filter(|&i| on_boundary[i])
        .map(|i| plane.signed_distance(&half.positions()[i]).abs())
        .fold(0.0, f64::max);
    if deviation > tolerance {
        return Err(MeshError::BoundaryOffPlane { deviation, tolerance });
    }
    let off_plane = half.positions().iter().any(|p| plane.signed_distance(p).abs() > tolerance);
    if !off_plane {
        // Every vertex on the plane: the two sheets coincide.
        return Err(MeshError::ZeroAreaFaces { faces: (0..half.face_count()).collect() });
    }

    let mut positions: Vec<Point> =
        half.positions().iter().zip(&on_boundary).map(|(p, &b)| if b { plane.project(p) } else { *p }).collect();
    let mut image: Vec<usize> = (0..half.vertex_count()).collect();
    for i in 0..half.vertex_count() {
        if !on_boundary[i] {
            image[i] = positions.len();
            positions.push(plane.reflect(&half.positions()[i]));
        }
    }
    let mut faces = half.faces().to_vec();
    faces.extend(half.faces().iter().map(|&[a, b, c]| [image[a], image[c], image[b]]));
    TriMesh::new(positions, faces)
}

fn count_loops(boundary: &[(usize, usize)]) -> Result<usize, MeshError> {
    let mut next: HashMap<usize, usize> = HashMap::new();
    for &(a, b) in boundary {
        if next.insert(a, b).is_some() {
            // Pinched boundary: a vertex starts two boundary edges.
            return Err(MeshError::BoundaryLoops { loops: 2 });
        }
    }
    let mut visited: HashMap<usize, bool> = next.keys().map(|&k| (k, false)).collect();
    let mut starts: Vec<usize> = next.keys().copied().collect();
    starts.sort_unstable();
    let mut loops = 0;
    for s in starts {
        if visited[&s] {
            continue;
        }
        loops += 1;
        let mut v = s;
        while !visited[&v] {
            visited.insert(v, true);
            v = match next.get(&v) {
                Some(&n) => n,
                None => break,
            };
        }
    }
    Ok(loops)
}
