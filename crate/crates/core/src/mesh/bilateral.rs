//! Bilateral normal filtering: filter face normals, then move vertices to fit them.
//!
//! Each round filters the normals of faces touching the region,
//!
//! ```text
//! n_i ← normalize( Σ_j A_j · W_c(‖c_i − c_j‖) · W_s(‖n_i − n_j‖) · n_j )
//! ```
//!
//! over faces `j` sharing a vertex with `i`, with Gaussian kernels
//! `W(x) = exp(−x² / 2σ²)`. Region vertices are then moved so the faces align
//! with the filtered normals:
//!
//! ```text
//! x_v ← x_v + 1/|F_v| · Σ_{f ∈ F_v} n_f (n_f · (c_f − x_v))
//! ```

use serde::{Deserialize, Serialize};

use super::{MeshError, TriMesh, VertexRegion};
use crate::geom::{Point, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilateralParams {
    /// Spatial kernel width; `None` uses the mean edge length of the region.
    pub sigma_c: Option<f64>,
    /// Normal-difference kernel width.
    pub sigma_s: f64,
    /// Filter-then-update rounds.
    pub iters: usize,
    /// Vertex update steps per round.
    pub vertex_steps: usize,
}

impl Default for BilateralParams {
    fn default() -> Self {
        Self { sigma_c: None, sigma_s: 0.35, iters: 3, vertex_steps: 10 }
    }
}

impl BilateralParams {
    pub fn with_sigmas(sigma_c: f64, sigma_s: f64) -> Self {
        Self { sigma_c: Some(sigma_c), sigma_s, ..Self::default() }
    }
}

/// Mean length of edges with at least one endpoint in `region`.
pub(crate) fn mean_edge_length(mesh: &TriMesh, region: &VertexRegion) -> f64 {
    let p = mesh.positions();
    let (mut sum, mut count) = (0.0, 0usize);
    for ((a, b), _) in mesh.edges() {
        if region.contains(a) || region.contains(b) {
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

/// Smooths face normals around `region` and moves region vertices to match.
/// Vertices outside `region` keep their exact positions.
pub fn bilateral_normal_filter(
    mesh: &TriMesh,
    region: &VertexRegion,
    params: &BilateralParams,
) -> Result<TriMesh, MeshError> {
    assert!(params.sigma_s > 0.0, "sigma_s must be positive");
    if region.is_empty() || mesh.face_count() == 0 {
        return Ok(mesh.clone());
    }
    let sigma_c = params.sigma_c.unwrap_or_else(|| mean_edge_length(mesh, region));
    if !(sigma_c > 0.0) {
        return Ok(mesh.clone());
    }
    let adj = mesh.adjacency();
    let inside = region.mask(mesh.vertex_count());
    let active: Vec<usize> = (0..mesh.face_count()).filter(|&f| mesh.faces()[f].iter().any(|&v| inside[v])).collect();
    // Face neighborhoods: faces sharing at least one vertex.
    let neighborhoods: Vec<Vec<usize>> = active
        .iter()
        .map(|&f| {
            let mut n: Vec<usize> = mesh.faces()[f].iter().flat_map(|&v| adj.faces[v].iter().copied()).collect();
            n.sort_unstable();
            n.dedup();
            n
        })
        .collect();

    let faces = mesh.faces();
    let mut positions: Vec<Point> = mesh.positions().to_vec();
    let two_c = 2.0 * sigma_c * sigma_c;
    let two_s = 2.0 * params.sigma_s * params.sigma_s;

    for _ in 0..params.iters {
        let snapshot = mesh.with_positions(positions.clone())?;
        let normals: Vec<Vector> = (0..faces.len()).map(|f| snapshot.face_normal(f)).collect();
        let centroids: Vec<Point> = (0..faces.len()).map(|f| snapshot.face_centroid(f)).collect();
        let areas: Vec<f64> = (0..faces.len()).map(|f| snapshot.face_area(f)).collect();

        let mut filtered = normals.clone();
        for (&f, nbrs) in active.iter().zip(&neighborhoods) {
            let mut acc = Vector::zeros();
            for &g in nbrs {
                let dc = (centroids[f] - centroids[g]).norm_squared();
                let dn = (normals[f] - normals[g]).norm_squared();
                acc += normals[g] * (areas[g] * (-dc / two_c).exp() * (-dn / two_s).exp());
            }
            if let Some(n) = acc.try_normalize(0.0) {
                filtered[f] = n;
            }
        }

        for _ in 0..params.vertex_steps {
            let centroids: Vec<Point> = faces
                .iter()
                .map(|t| Point::from((positions[t[0]].coords + positions[t[1]].coords + positions[t[2]].coords) / 3.0))
                .collect();
            let mut next = positions.clone();
            for v in region.members().iter().copied() {
                let incident = &adj.faces[v];
                if incident.is_empty() {
                    continue;
                }
                let mut delta = Vector::zeros();
                for &f in incident {
                    let n = filtered[f];
                    delta += n * n.dot(&(centroids[f] - positions[v]));
                }
                next[v] = positions[v] + delta / incident.len() as f64;
            }
            positions = next;
        }
    }
    mesh.with_positions(positions)
}
