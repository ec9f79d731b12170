//! Indexed triangle meshes and the per-vertex operators built on them.
//!
//! A [`TriMesh`] is validated on construction and never mutated afterwards;
//! every operation returns a new mesh. Adjacency is derived lazily and cached.

mod bilateral;
mod laplacian;
mod mirror;
pub mod obj;
mod primitives;
mod query;
mod region;
mod subdivide;

use std::collections::HashMap;
use std::sync::OnceLock;

use thiserror::Error;

use crate::geom::{triangle_area, triangle_normal, Aabb, Point, Vector};

pub use bilateral::{bilateral_normal_filter, BilateralParams};
pub use laplacian::{laplacian, LaplacianKind};
pub use mirror::{mirror_weld, MirrorPlane};
pub use primitives::{cube, grid, icosphere, octahedron, tetrahedron};
pub use query::{MeshQuery, SurfaceHit};
pub use region::{k_ring, ring_distances, VertexRegion};
pub use subdivide::{boundary_chords, midpoint_subdivide, split_boundary_chords, split_edges};

/// Faces with area at or below this fraction of `bbox_diagonal²` are degenerate.
pub const ZERO_AREA_FRACTION: f64 = 1e-12;

/// Unit vector reported for vertices without incident faces.
pub const FALLBACK_NORMAL: Vector = Vector::new(0.0, 0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("face {face} references vertex {index} but the mesh has {count} vertices")]
    IndexOutOfRange { face: usize, index: usize, count: usize },
    #[error("face {face} repeats a vertex")]
    RepeatedVertex { face: usize },
    #[error("edge ({a}, {b}) is shared by more than two faces")]
    NonManifoldEdge { a: usize, b: usize },
    #[error("edge ({a}, {b}) is traversed twice in the same direction")]
    InconsistentOrientation { a: usize, b: usize },
    #[error("{} zero-area face(s), first {:?}", faces.len(), faces.first())]
    ZeroAreaFaces { faces: Vec<usize> },
    #[error("isolated vertices have no Laplacian: {indices:?}")]
    IsolatedVertices { indices: Vec<usize> },
    #[error("region references vertex {index} outside a mesh of {count}")]
    RegionOutOfRange { index: usize, count: usize },
    #[error("boundary is {deviation:e} off the mirror plane (tolerance {tolerance:e})")]
    BoundaryOffPlane { deviation: f64, tolerance: f64 },
    #[error("expected a single open boundary loop, found {loops}")]
    BoundaryLoops { loops: usize },
    #[error("interior edge ({a}, {b}) joins two boundary vertices")]
    BoundaryChord { a: usize, b: usize },
    #[error("mesh is not watertight: {open_edges} open edge(s)")]
    NotWatertight { open_edges: usize },
    #[error("position count {found} does not match vertex count {expected}")]
    PositionCount { expected: usize, found: usize },
    #[error("OBJ line {line}: {message}")]
    Obj { line: usize, message: String },
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for MeshError {
    fn from(e: std::io::Error) -> Self {
        MeshError::Io(e.to_string())
    }
}

/// Vertex-to-vertex and vertex-to-face incidence.
#[derive(Debug, Clone)]
pub struct Adjacency {
    /// Sorted neighbor indices per vertex.
    pub neighbors: Vec<Vec<usize>>,
    /// Incident faces per vertex, in face order.
    pub faces: Vec<Vec<usize>>,
}

/// An indexed, consistently oriented triangle mesh.
#[derive(Debug, Clone, Default)]
pub struct TriMesh {
    positions: Vec<Point>,
    faces: Vec<[usize; 3]>,
    adjacency: OnceLock<Adjacency>,
}

impl PartialEq for TriMesh {
    fn eq(&self, other: &Self) -> bool {
        self.positions == other.positions && self.faces == other.faces
    }
}

impl TriMesh {
    /// Builds a mesh, checking index ranges, manifoldness, orientation and
    /// face areas.
    pub fn new(positions: Vec<Point>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        validate_topology(positions.len(), &faces)?;
        let mesh = Self { positions, faces, adjacency: OnceLock::new() };
        let degenerate = mesh.degenerate_faces();
        if !degenerate.is_empty() {
            return Err(MeshError::ZeroAreaFaces { faces: degenerate });
        }
        Ok(mesh)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Same connectivity, new positions. Re-checks face areas.
    pub fn with_positions(&self, positions: Vec<Point>) -> Result<Self, MeshError> {
        if positions.len() != self.positions.len() {
            return Err(MeshError::PositionCount { expected: self.positions.len(), found: positions.len() });
        }
        let mesh = Self { positions, faces: self.faces.clone(), adjacency: self.adjacency.clone() };
        let degenerate = mesh.degenerate_faces();
        if !degenerate.is_empty() {
            return Err(MeshError::ZeroAreaFaces { faces: degenerate });
        }
        Ok(mesh)
    }

    /// Equality of faces and of every coordinate's bit pattern.
    pub fn bitwise_eq(&self, other: &TriMesh) -> bool {
        self.faces == other.faces
            && self.positions.len() == other.positions.len()
            && self
                .positions
                .iter()
                .zip(&other.positions)
                .all(|(a, b)| a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()))
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn bbox(&self) -> Option<Aabb> {
        Aabb::from_points(&self.positions)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        self.bbox().map_or(0.0, |b| b.diagonal())
    }

    pub fn adjacency(&self) -> &Adjacency {
        self.adjacency.get_or_init(|| {
            let n = self.positions.len();
            let mut neighbors = vec![Vec::new(); n];
            let mut faces = vec![Vec::new(); n];
            for (f, tri) in self.faces.iter().enumerate() {
                for k in 0..3 {
                    let (a, b) = (tri[k], tri[(k + 1) % 3]);
                    neighbors[a].push(b);
                    neighbors[b].push(a);
                    faces[a].push(f);
                }
            }
            for list in &mut neighbors {
                list.sort_unstable();
                list.dedup();
            }
            Adjacency { neighbors, faces }
        })
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency().neighbors[v]
    }

    pub fn face_corners(&self, f: usize) -> [&Point; 3] {
        let [a, b, c] = self.faces[f];
        [&self.positions[a], &self.positions[b], &self.positions[c]]
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.face_corners(f);
        triangle_area(a, b, c)
    }

    /// Unit face normal (zero vector for degenerate faces).
    pub fn face_normal(&self, f: usize) -> Vector {
        let [a, b, c] = self.face_corners(f);
        triangle_normal(a, b, c).try_normalize(0.0).unwrap_or_else(Vector::zeros)
    }

    pub fn face_centroid(&self, f: usize) -> Point {
        let [a, b, c] = self.face_corners(f);
        Point::from((a.coords + b.coords + c.coords) / 3.0)
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Mean edge length; 0 for a mesh without edges.
    pub fn mean_edge_length(&self) -> f64 {
        let edges = self.edges();
        if edges.is_empty() {
            return 0.0;
        }
        let p = &self.positions;
        edges.iter().map(|&((a, b), _)| (p[a] - p[b]).norm()).sum::<f64>() / edges.len() as f64
    }

    /// Faces whose area is below the degeneracy threshold.
    pub fn degenerate_faces(&self) -> Vec<usize> {
        let diag = self.bbox_diagonal();
        let threshold = ZERO_AREA_FRACTION * diag * diag;
        (0..self.faces.len()).filter(|&f| !(self.face_area(f) > threshold)).collect()
    }

    /// Area-weighted unit vertex normals.
    pub fn vertex_normals(&self) -> Vec<Vector> {
        let mut acc = vec![Vector::zeros(); self.positions.len()];
        for tri in &self.faces {
            let [a, b, c] = tri.map(|i| &self.positions[i]);
            let n = triangle_normal(a, b, c);
            for &i in tri {
                acc[i] += n;
            }
        }
        let mut fallback = 0usize;
        let normals = acc
            .into_iter()
            .map(|n| {
                n.try_normalize(0.0).unwrap_or_else(|| {
                    fallback += 1;
                    FALLBACK_NORMAL
                })
            })
            .collect();
        if fallback > 0 {
            log::warn!("{fallback} vertex normal(s) undefined; using +z");
        }
        normals
    }

    /// One third of the incident face areas per vertex.
    pub fn vertex_areas(&self) -> Vec<f64> {
        let mut areas = vec![0.0; self.positions.len()];
        for f in 0..self.faces.len() {
            let third = self.face_area(f) / 3.0;
            for &i in &self.faces[f] {
                areas[i] += third;
            }
        }
        areas
    }

    /// Undirected edges `(min, max)` with their incident face counts, sorted.
    pub fn edges(&self) -> Vec<((usize, usize), usize)> {
        let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.faces {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *counts.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut edges: Vec<_> = counts.into_iter().collect();
        edges.sort_unstable();
        edges
    }

    /// Directed boundary edges (edges with one incident face), in face order.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.faces {
            for k in 0..3 {
                directed.insert((tri[k], tri[(k + 1) % 3]), 1);
            }
        }
        let mut out = Vec::new();
        for tri in &self.faces {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if !directed.contains_key(&(b, a)) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn is_watertight(&self) -> bool {
        !self.faces.is_empty() && self.boundary_edges().is_empty()
    }

    /// Euler characteristic `V − E + F` over referenced vertices.
    pub fn euler_characteristic(&self) -> i64 {
        let e = self.edges().len() as i64;
        let mut used = vec![false; self.positions.len()];
        for tri in &self.faces {
            for &i in tri {
                used[i] = true;
            }
        }
        let v = used.iter().filter(|&&u| u).count() as i64;
        v - e + self.faces.len() as i64
    }

    /// Vertices not referenced by any face.
    pub fn isolated_vertices(&self) -> Vec<usize> {
        let adj = self.adjacency();
        (0..self.positions.len()).filter(|&i| adj.faces[i].is_empty()).collect()
    }

    /// Drops degenerate faces and unreferenced vertices. Returns the cleaned
    /// mesh and the indices of the removed faces.
    pub fn remove_degenerate_faces(
        positions: Vec<Point>,
        faces: Vec<[usize; 3]>,
    ) -> Result<(Self, Vec<usize>), MeshError> {
        validate_topology(positions.len(), &faces)?;
        let probe = Self { positions, faces, adjacency: OnceLock::new() };
        let removed = probe.degenerate_faces();
        if removed.is_empty() {
            return Ok((probe, removed));
        }
        log::warn!("collapsing {} zero-area face(s)", removed.len());
        let Self { positions, faces, .. } = probe;
        let kept: Vec<[usize; 3]> =
            faces.into_iter().enumerate().filter(|(i, _)| removed.binary_search(i).is_err()).map(|(_, f)| f).collect();
        let mut remap = vec![usize::MAX; positions.len()];
        let mut new_positions = Vec::new();
        for tri in &kept {
            for &i in tri {
                if remap[i] == usize::MAX {
                    remap[i] = new_positions.len();
                    new_positions.push(positions[i]);
                }
            }
        }
        let kept = kept.into_iter().map(|t| t.map(|i| remap[i])).collect();
        Ok((Self::new(new_positions, kept)?, removed))
    }
}

fn validate_topology(n: usize, faces: &[[usize; 3]]) -> Result<(), MeshError> {
    let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3);
    for (f, tri) in faces.iter().enumerate() {
        for &i in tri {
            if i >= n {
                return Err(MeshError::IndexOutOfRange { face: f, index: i, count: n });
            }
        }
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            return Err(MeshError::RepeatedVertex { face: f });
        }
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if directed.insert((a, b), f).is_some() {
                let undirected_twice = directed.contains_key(&(b, a));
                return Err(if undirected_twice {
                    MeshError::NonManifoldEdge { a: a.min(b), b: a.max(b) }
                } else {
                    MeshError::InconsistentOrientation { a, b }
                });
            }
        }
    }
    Ok(())
}
