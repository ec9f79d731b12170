//! Handle-based Laplacian editing: free vertices keep their differential
//! coordinates while handle vertices are pulled toward targets and anchors
//! stay fixed.
//!
//! ```text
//! min Σ_{i free} ‖L(v)_i − L(v⁰)_i‖² + w_h · Σ_{h} ‖v_h − t_h‖²
//! ```
//!
//! With the uniform Laplacian the system matrix depends only on
//! connectivity and the handle/anchor sets, so one factorization serves
//! every target update.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Point;
use crate::linsolve::{
    factorize, factorize_in_background, least_squares, solve_with, PendingFactorization, SolveError, SparseMatrix,
};
use crate::mesh::{laplacian, ring_distances, LaplacianKind, MeshError, MeshQuery, TriMesh};
use crate::stroke::Stroke;

/// Weight of the soft handle rows.
pub const HANDLE_WEIGHT: f64 = 10.0;

/// Vertices farther than this many rings from the handle become anchors.
pub const ANCHOR_RINGS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeformError {
    #[error("stroke point {index} is {distance:e} from the surface (tolerance {tolerance:e})")]
    OffSurface { index: usize, distance: f64, tolerance: f64 },
    #[error("stroke revisits vertex {vertex} at point {index}")]
    RevisitedVertex { vertex: usize, index: usize },
    #[error("handle is empty")]
    EmptyHandle,
    #[error("vertex {index} outside a mesh of {count}")]
    VertexOutOfRange { index: usize, count: usize },
    #[error("vertex {vertex} is both handle and anchor")]
    AnchorOnHandle { vertex: usize },
    #[error("handle has {handles} vertices but {targets} targets")]
    TargetCount { handles: usize, targets: usize },
    #[error("handle has no targets")]
    NoTargets,
    #[error("factorization was built for a different mesh or handle")]
    StaleSystem,
    #[error("invalid weight {0}")]
    BadWeight(f64),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// An on-surface control curve bound to mesh vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandleCurve {
    pub vertex_ids: Vec<usize>,
    pub targets: Option<Vec<Point>>,
    pub anchor_ids: Vec<usize>,
}

impl HandleCurve {
    /// A handle over `vertex_ids` with anchors at every vertex farther than
    /// `anchor_rings` rings from it.
    pub fn new(mesh: &TriMesh, vertex_ids: Vec<usize>, anchor_rings: usize) -> Result<Self, DeformError> {
        check_ids(mesh, &vertex_ids)?;
        let rings = ring_distances(mesh, vertex_ids.iter().copied());
        let anchor_ids = (0..mesh.vertex_count()).filter(|&v| rings[v] > anchor_rings).collect();
        let h = Self { vertex_ids, targets: None, anchor_ids };
        h.validate(mesh)?;
        Ok(h)
    }

    pub fn with_targets(mut self, targets: Vec<Point>) -> Result<Self, DeformError> {
        if targets.len() != self.vertex_ids.len() {
            return Err(DeformError::TargetCount { handles: self.vertex_ids.len(), targets: targets.len() });
        }
        self.targets = Some(targets);
        Ok(self)
    }

    /// Current positions of the handle vertices.
    pub fn rest_targets(&self, mesh: &TriMesh) -> Vec<Point> {
        self.vertex_ids.iter().map(|&v| mesh.positions()[v]).collect()
    }

    pub fn validate(&self, mesh: &TriMesh) -> Result<(), DeformError> {
        if self.vertex_ids.is_empty() {
            return Err(DeformError::EmptyHandle);
        }
        check_ids(mesh, &self.vertex_ids)?;
        check_ids(mesh, &self.anchor_ids)?;
        let mut seen = vec![false; mesh.vertex_count()];
        for (i, &v) in self.vertex_ids.iter().enumerate() {
            if seen[v] {
                return Err(DeformError::RevisitedVertex { vertex: v, index: i });
            }
            seen[v] = true;
        }
        if let Some(&vertex) = self.anchor_ids.iter().find(|&&a| seen[a]) {
            return Err(DeformError::AnchorOnHandle { vertex });
        }
        if let Some(t) = &self.targets {
            if t.len() != self.vertex_ids.len() {
                return Err(DeformError::TargetCount { handles: self.vertex_ids.len(), targets: t.len() });
            }
        }
        Ok(())
    }
}

fn check_ids(mesh: &TriMesh, ids: &[usize]) -> Result<(), DeformError> {
    match ids.iter().find(|&&i| i >= mesh.vertex_count()) {
        Some(&index) => Err(DeformError::VertexOutOfRange { index, count: mesh.vertex_count() }),
        None => Ok(()),
    }
}

/// Nearest vertex to `p`; ties go to the lower index.
pub fn nearest_vertex(mesh: &TriMesh, p: &Point) -> Option<usize> {
    mesh.positions()
        .par_iter()
        .enumerate()
        .map(|(i, q)| ((q - p).norm_squared(), i))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, i)| i)
}

/// Maps each stroke point to its nearest vertex, collapsing consecutive
/// repeats; anchors are the vertices beyond [`ANCHOR_RINGS`] rings.
pub fn bind_handle(mesh: &TriMesh, stroke: &Stroke, snap_tol: f64) -> Result<HandleCurve, DeformError> {
    bind_handle_with(mesh, stroke, snap_tol, ANCHOR_RINGS)
}

pub fn bind_handle_with(
    mesh: &TriMesh,
    stroke: &Stroke,
    snap_tol: f64,
    anchor_rings: usize,
) -> Result<HandleCurve, DeformError> {
    if stroke.is_empty() || mesh.vertex_count() == 0 {
        return Err(DeformError::EmptyHandle);
    }
    let query = MeshQuery::new(mesh);
    let mut ids: Vec<usize> = Vec::new();
    for (index, p) in stroke.points.iter().enumerate() {
        let hit = query.closest_point(p).ok_or(DeformError::EmptyHandle)?;
        if hit.distance > snap_tol {
            return Err(DeformError::OffSurface { index, distance: hit.distance, tolerance: snap_tol });
        }
        let v = nearest_vertex(mesh, p).ok_or(DeformError::EmptyHandle)?;
        if ids.last() == Some(&v) {
            continue;
        }
        if ids.contains(&v) {
            return Err(DeformError::RevisitedVertex { vertex: v, index });
        }
        ids.push(v);
    }
    HandleCurve::new(mesh, ids, anchor_rings)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeformParams {
    pub handle_weight: f64,
    pub laplacian_weight: f64,
}

impl Default for DeformParams {
    fn default() -> Self {
        Self { handle_weight: HANDLE_WEIGHT, laplacian_weight: 1.0 }
    }
}

/// The assembled editing system for one mesh connectivity and handle,
/// together with its (possibly still running) factorization.
#[derive(Debug, Clone)]
pub struct HandleSystem {
    digest: u64,
    params: DeformParams,
    laplacian: SparseMatrix,
    /// Unknown vertices (all but anchors), ascending.
    free: Vec<usize>,
    matrix: SparseMatrix,
    factorization: PendingFactorization,
}

fn digest(mesh: &TriMesh, handle: &HandleCurve) -> u64 {
    let mut h = DefaultHasher::new();
    mesh.vertex_count().hash(&mut h);
    mesh.faces().hash(&mut h);
    handle.vertex_ids.hash(&mut h);
    handle.anchor_ids.hash(&mut h);
    h.finish()
}

impl HandleSystem {
    fn assemble(
        mesh: &TriMesh,
        handle: &HandleCurve,
        params: DeformParams,
    ) -> Result<(Self, SparseMatrix), DeformError> {
        handle.validate(mesh)?;
        for w in [params.handle_weight, params.laplacian_weight] {
            if !(w > 0.0 && w.is_finite()) {
                return Err(DeformError::BadWeight(w));
            }
        }
        let n = mesh.vertex_count();
        let l = laplacian(mesh, LaplacianKind::Uniform)?;
        let mut anchored = vec![false; n];
        for &a in &handle.anchor_ids {
            anchored[a] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&v| !anchored[v]).collect();
        let mut local = vec![usize::MAX; n];
        for (k, &v) in free.iter().enumerate() {
            local[v] = k;
        }
        let wl = params.laplacian_weight.sqrt();
        let mut triplets = Vec::new();
        for (row, &i) in free.iter().enumerate() {
            for (j, a) in l.row(i) {
                if local[j] != usize::MAX {
                    triplets.push((row, local[j], wl * a));
                }
            }
        }
        let wh = params.handle_weight.sqrt();
        for (k, &h) in handle.vertex_ids.iter().enumerate() {
            triplets.push((free.len() + k, local[h], wh));
        }
        let matrix = SparseMatrix::from_triplets(free.len() + handle.vertex_ids.len(), free.len(), triplets)?;
        let sys = Self {
            digest: digest(mesh, handle),
            params,
            laplacian: l,
            free,
            matrix: matrix.clone(),
            factorization: PendingFactorization::ready(Err(SolveError::WorkerFailed)),
        };
        Ok((sys, matrix))
    }

    /// Whether the factorization has finished (successfully or not).
    pub fn is_ready(&self) -> bool {
        self.factorization.is_ready()
    }

    /// Blocks until the background factorization completes.
    pub fn wait(&self) -> Result<(), DeformError> {
        self.factorization.wait().map(|_| ()).map_err(DeformError::from)
    }

    pub fn matches(&self, mesh: &TriMesh, handle: &HandleCurve) -> bool {
        self.digest == digest(mesh, handle)
    }
}

/// Assembles and factorizes the editing system.
pub fn prefactorize(mesh: &TriMesh, handle: &HandleCurve, params: DeformParams) -> Result<HandleSystem, DeformError> {
    let (mut sys, matrix) = HandleSystem::assemble(mesh, handle, params)?;
    sys.factorization = PendingFactorization::ready(factorize(&matrix));
    sys.wait()?;
    Ok(sys)
}

/// Assembles the system and factorizes it on a worker thread.
pub fn prefactorize_in_background(
    mesh: &TriMesh,
    handle: &HandleCurve,
    params: DeformParams,
) -> Result<HandleSystem, DeformError> {
    let (mut sys, matrix) = HandleSystem::assemble(mesh, handle, params)?;
    sys.factorization = factorize_in_background(matrix);
    Ok(sys)
}

fn right_hand_side(mesh: &TriMesh, handle: &HandleCurve, sys: &HandleSystem) -> Result<DMatrix<f64>, DeformError> {
    let targets = handle.targets.as_ref().ok_or(DeformError::NoTargets)?;
    let x = mesh.positions();
    let n = mesh.vertex_count();
    let mut free = vec![false; n];
    for &v in &sys.free {
        free[v] = true;
    }
    let wl = sys.params.laplacian_weight.sqrt();
    let wh = sys.params.handle_weight.sqrt();
    let rows = sys.matrix.rows();
    let mut b = DMatrix::zeros(rows, 3);
    for (row, &i) in sys.free.iter().enumerate() {
        for (j, a) in sys.laplacian.row(i) {
            // L(v⁰)_i minus the anchored part of L(v)_i leaves the free terms.
            if free[j] {
                for c in 0..3 {
                    b[(row, c)] += wl * a * x[j][c];
                }
            }
        }
    }
    let base = sys.free.len();
    for (k, t) in targets.iter().enumerate() {
        for c in 0..3 {
            b[(base + k, c)] = wh * t[c];
        }
    }
    Ok(b)
}

fn assemble_output(mesh: &TriMesh, sys: &HandleSystem, sol: &DMatrix<f64>) -> Result<TriMesh, DeformError> {
    let mut out = mesh.positions().to_vec();
    for (k, &v) in sys.free.iter().enumerate() {
        out[v] = Point::new(sol[(k, 0)], sol[(k, 1)], sol[(k, 2)]);
    }
    Ok(mesh.with_positions(out)?)
}

/// Deforms `mesh` (the rest shape whose Laplacians are preserved) toward the
/// handle targets. Uses the system's factorization when it is ready and
/// otherwise solves from scratch. Anchors keep their exact positions.
pub fn deform(mesh: &TriMesh, handle: &HandleCurve, sys: &HandleSystem) -> Result<TriMesh, DeformError> {
    handle.validate(mesh)?;
    if !sys.matches(mesh, handle) {
        return Err(DeformError::StaleSystem);
    }
    let b = right_hand_side(mesh, handle, sys)?;
    let sol = match sys.factorization.try_get() {
        Some(Ok(f)) => solve_with(&f, &b)?,
        _ => least_squares(&sys.matrix, &b)?,
    };
    assemble_output(mesh, sys, &sol)
}

/// Assembles, factorizes and solves in one call.
pub fn deform_fresh(mesh: &TriMesh, handle: &HandleCurve, params: DeformParams) -> Result<TriMesh, DeformError> {
    let (sys, matrix) = HandleSystem::assemble(mesh, handle, params)?;
    let b = right_hand_side(mesh, handle, &sys)?;
    let sol = least_squares(&matrix, &b)?;
    assemble_output(mesh, &sys, &sol)
}
