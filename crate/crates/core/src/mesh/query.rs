//! Bounding-volume hierarchy over mesh triangles for closest-point and ray
//! queries.

use std::sync::Arc;

use super::TriMesh;
use crate::geom::{closest_point_on_triangle, ray_triangle, Aabb, Point, Vector};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Closest surface point to a query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceHit {
    pub face: usize,
    pub point: Point,
    pub distance: f64,
}

/// Spatial index over a mesh snapshot (the mesh is shared, not copied, when
/// built from an `Arc`).
#[derive(Debug, Clone)]
pub struct MeshQuery {
    mesh: Arc<TriMesh>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl MeshQuery {
    pub fn new(mesh: &TriMesh) -> Self {
        Self::from_arc(Arc::new(mesh.clone()))
    }

    pub fn from_arc(mesh: Arc<TriMesh>) -> Self {
        let mesh_ref: &TriMesh = &mesh;
        let mut order: Vec<usize> = (0..mesh_ref.face_count()).collect();
        let centroids: Vec<Point> = (0..mesh_ref.face_count()).map(|f| mesh_ref.face_centroid(f)).collect();
        let mut nodes = Vec::new();
        if !order.is_empty() {
            let n = order.len();
            build(mesh_ref, &centroids, &mut order, 0, n, &mut nodes);
        }
        Self { mesh, order, nodes }
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    fn triangle(&self, f: usize) -> [&Point; 3] {
        self.mesh.face_corners(f)
    }

    /// Closest point on the surface; `None` for meshes without faces.
    /// Ties are resolved toward the lower face index.
    pub fn closest_point(&self, p: &Point) -> Option<SurfaceHit> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(f64, usize, Point)> = None;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if let Some((d2, _, _)) = best {
                if node.bounds().distance_squared(p) > d2 {
                    continue;
                }
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    for &f in &self.order[start..end] {
                        let [a, b, c] = self.triangle(f);
                        let q = closest_point_on_triangle(p, a, b, c);
                        let d2 = (q - p).norm_squared();
                        let better = match best {
                            None => true,
                            Some((bd, bf, _)) => d2 < bd || (d2 == bd && f < bf),
                        };
                        if better {
                            best = Some((d2, f, q));
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[left].bounds().distance_squared(p);
                    let dr = self.nodes[right].bounds().distance_squared(p);
                    if dl <= dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        best.map(|(d2, face, point)| SurfaceHit { face, point, distance: d2.sqrt() })
    }

    /// All ray-triangle hits `(t, face)` with `t > 0`, sorted by `t` then face.
    pub fn ray_hits(&self, origin: &Point, dir: &Vector) -> Vec<(f64, usize)> {
        let mut hits = Vec::new();
        if self.nodes.is_empty() {
            return hits;
        }
        let inv = dir.map(|d| 1.0 / d);
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bounds().ray_hit(origin, &inv).is_none() {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    for &f in &self.order[start..end] {
                        let [a, b, c] = self.triangle(f);
                        if let Some((t, _, _)) = ray_triangle(origin, dir, a, b, c) {
                            hits.push((t, f));
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        hits
    }

    /// Nearest ray hit.
    pub fn first_hit(&self, origin: &Point, dir: &Vector) -> Option<(f64, usize)> {
        self.ray_hits(origin, dir).into_iter().next()
    }
}

fn build(
    mesh: &TriMesh,
    centroids: &[Point],
    order: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let mut bounds = Aabb::from_points(mesh.face_corners(order[start])).expect("three corners");
    for &f in &order[start..end] {
        for p in mesh.face_corners(f) {
            bounds.include(p);
        }
    }
    let index = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { bounds, start, end });
        return index;
    }
    let cb = Aabb::from_points(order[start..end].iter().map(|&f| &centroids[f])).expect("nonempty");
    let ext = cb.extent();
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    order[start..end].sort_by(|&a, &b| centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b)));
    let mid = (start + end) / 2;
    nodes.push(Node::Leaf { bounds, start, end });
    let left = build(mesh, centroids, order, start, mid, nodes);
    let right = build(mesh, centroids, order, mid, end, nodes);
    nodes[index] = Node::Inner { bounds, left, right };
    index
}
