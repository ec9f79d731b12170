use serde::{Deserialize, Serialize};

use super::{MeshError, TriMesh};
use crate::linsolve::SparseMatrix;

/// Edge weighting of the discrete Laplacian.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianKind {
    /// Graph Laplacian, every neighbor weighted equally.
    #[default]
    Uniform,
    /// Cotangent weights, normalized per row.
    Cotangent,
}

/// Row-normalized Laplacian with `L(x)_i = Σ_j w_ij x_j − x_i`, `Σ_j w_ij = 1`.
///
/// The sign convention is mean-of-neighbors minus center: on a convex bump
/// `L(v)` points inward. Constant fields are in the kernel.
pub fn laplacian(mesh: &TriMesh, kind: LaplacianKind) -> Result<SparseMatrix, MeshError> {
    let isolated = mesh.isolated_vertices();
    if !isolated.is_empty() {
        return Err(MeshError::IsolatedVertices { indices: isolated });
    }
    let n = mesh.vertex_count();
    let cot = match kind {
        LaplacianKind::Uniform => None,
        LaplacianKind::Cotangent => Some(cotangent_weights(mesh)),
    };
    let mut triplets = Vec::new();
    for i in 0..n {
        let nbrs = mesh.neighbors(i);
        let weights: Vec<f64> = match &cot {
            Some(w) => {
                let raw: Vec<f64> = nbrs.iter().map(|&j| w[i].get(&j).copied().unwrap_or(0.0)).collect();
                let total: f64 = raw.iter().sum();
                if total > 1e-12 {
                    raw.iter().map(|w| w / total).collect()
                } else {
                    vec![1.0 / nbrs.len() as f64; nbrs.len()]
                }
            }
            None => vec![1.0 / nbrs.len() as f64; nbrs.len()],
        };
        triplets.push((i, i, -1.0));
        for (&j, w) in nbrs.iter().zip(weights) {
            triplets.push((i, j, w));
        }
    }
    Ok(SparseMatrix::from_triplets(n, n, triplets).expect("indices in range"))
}

/// `(cot α + cot β) / 2` per directed vertex pair.
fn cotangent_weights(mesh: &TriMesh) -> Vec<std::collections::BTreeMap<usize, f64>> {
    let mut w = vec![std::collections::BTreeMap::new(); mesh.vertex_count()];
    let p = mesh.positions();
    for tri in mesh.faces() {
        for k in 0..3 {
            let (o, a, b) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
            let u = p[a] - p[o];
            let v = p[b] - p[o];
            let cot = u.dot(&v) / u.cross(&v).norm().max(1e-300);
            *w[a].entry(b).or_insert(0.0) += 0.5 * cot;
            *w[b].entry(a).or_insert(0.0) += 0.5 * cot;
        }
    }
    w
}
