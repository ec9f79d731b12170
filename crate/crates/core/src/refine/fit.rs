use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{project_to_isosurface, ProjectionSchedule, RefineError};
use crate::geom::Point;
use crate::implicit::OccupancyField;
use crate::linsolve::{factorize, least_squares, solve_with, SparseMatrix};
use crate::mesh::{laplacian, LaplacianKind, TriMesh, VertexRegion};

/// Smoothness weight for whole-mesh coarse refinement.
pub const COARSE_LAMBDA: f64 = 1.0;

/// Projection + fit passes of coarse refinement. One pass keeps vertices that
/// already sit on the level set within the schedule's final step; a second
/// pass recovers from start gaps that the first pass leaves at its
/// worst-case residual.
pub const COARSE_ROUNDS: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FitParams {
    pub lambda: f64,
    /// Vertices that may move; `None` frees the whole mesh. Other vertices
    /// are held at their current positions.
    pub region: Option<VertexRegion>,
    pub laplacian: LaplacianKind,
}

impl FitParams {
    pub fn new(lambda: f64) -> Self {
        Self { lambda, region: None, laplacian: LaplacianKind::Uniform }
    }

    pub fn in_region(lambda: f64, region: VertexRegion) -> Self {
        Self { lambda, region: Some(region), laplacian: LaplacianKind::Uniform }
    }
}

fn check_targets(mesh: &TriMesh, targets: &[Point]) -> Result<(), RefineError> {
    if targets.len() != mesh.vertex_count() {
        return Err(RefineError::TargetCount { expected: mesh.vertex_count(), found: targets.len() });
    }
    if let Some(index) = targets.iter().position(|p| !p.coords.iter().all(|c| c.is_finite())) {
        return Err(RefineError::NonFiniteTarget { index });
    }
    Ok(())
}

/// Minimizes `λ·Σ_i ‖L(v)_i‖² + Σ_{i ∈ region} ‖v_i − v'_i‖²` over the region
/// vertices, with every other vertex fixed. The Laplacian sum runs over all
/// vertices; rows that touch no region vertex are constant and dropped.
pub fn fit_with_smoothness(mesh: &TriMesh, targets: &[Point], params: &FitParams) -> Result<TriMesh, RefineError> {
    check_targets(mesh, targets)?;
    if !(params.lambda >= 0.0 && params.lambda.is_finite()) {
        return Err(RefineError::BadLambda(params.lambda));
    }
    let n = mesh.vertex_count();
    let free: Vec<usize> = match &params.region {
        Some(r) => r.members().iter().copied().collect(),
        None => (0..n).collect(),
    };
    if free.is_empty() {
        return Ok(mesh.clone());
    }
    let mut local = vec![usize::MAX; n];
    for (k, &v) in free.iter().enumerate() {
        local[v] = k;
    }
    let x = mesh.positions();
    let mut triplets = Vec::new();
    let mut rhs: Vec<[f64; 3]> = Vec::new();
    if params.lambda > 0.0 {
        let w = params.lambda.sqrt();
        let l = laplacian(mesh, params.laplacian)?;
        for i in 0..n {
            if !l.row(i).any(|(j, _)| local[j] != usize::MAX) {
                continue;
            }
            let row = rhs.len();
            let mut b = [0.0; 3];
            for (j, a) in l.row(i) {
                if local[j] != usize::MAX {
                    triplets.push((row, local[j], w * a));
                } else {
                    for c in 0..3 {
                        b[c] -= w * a * x[j][c];
                    }
                }
            }
            rhs.push(b);
        }
    }
    for (k, &v) in free.iter().enumerate() {
        triplets.push((rhs.len(), k, 1.0));
        rhs.push([targets[v].x, targets[v].y, targets[v].z]);
    }
    let a = SparseMatrix::from_triplets(rhs.len(), free.len(), triplets)?;
    let b = DMatrix::from_fn(rhs.len(), 3, |r, c| rhs[r][c]);
    let sol = least_squares(&a, &b)?;
    let mut out = x.to_vec();
    for (k, &v) in free.iter().enumerate() {
        out[v] = Point::new(sol[(k, 0)], sol[(k, 1)], sol[(k, 2)]);
    }
    Ok(mesh.with_positions(out)?)
}

/// The objective minimized by [`fit_with_smoothness`] at `positions`.
pub fn fit_energy(
    mesh: &TriMesh,
    positions: &[Point],
    targets: &[Point],
    params: &FitParams,
) -> Result<f64, RefineError> {
    check_targets(mesh, targets)?;
    check_targets(mesh, positions)?;
    let l = laplacian(mesh, params.laplacian)?;
    let mut smooth = 0.0;
    for c in 0..3 {
        let col: Vec<f64> = positions.iter().map(|p| p[c]).collect();
        smooth += l.mul_vec(&col).iter().map(|v| v * v).sum::<f64>();
    }
    let data: f64 = (0..mesh.vertex_count())
        .filter(|&i| params.region.as_ref().is_none_or(|r| r.contains(i)))
        .map(|i| (positions[i] - targets[i]).norm_squared())
        .sum();
    Ok(params.lambda * smooth + data)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarseParams {
    pub schedule: ProjectionSchedule,
    pub lambda: f64,
    /// Projection + fit passes.
    pub outer_rounds: usize,
    #[serde(default)]
    pub laplacian: LaplacianKind,
}

impl Default for CoarseParams {
    fn default() -> Self {
        Self {
            schedule: ProjectionSchedule::default(),
            lambda: COARSE_LAMBDA,
            outer_rounds: COARSE_ROUNDS,
            laplacian: LaplacianKind::Uniform,
        }
    }
}

/// Projects every vertex onto the field's level set, then fits the whole
/// mesh to those targets with smoothness weight `lambda`; repeated
/// `outer_rounds` times. With the uniform Laplacian the fit matrix depends
/// only on connectivity, so it is factored once for all rounds.
pub fn refine_coarse(
    mesh: &TriMesh,
    field: &dyn OccupancyField,
    params: &CoarseParams,
) -> Result<TriMesh, RefineError> {
    if !(params.lambda >= 0.0 && params.lambda.is_finite()) {
        return Err(RefineError::BadLambda(params.lambda));
    }
    params.schedule.validate()?;
    let n = mesh.vertex_count();
    if n == 0 || params.outer_rounds == 0 {
        return Ok(mesh.clone());
    }
    let system = |m: &TriMesh| -> Result<SparseMatrix, RefineError> {
        let l = laplacian(m, params.laplacian)?.scaled(params.lambda.sqrt());
        Ok(SparseMatrix::vstack(&[&l, &SparseMatrix::identity(n)])?)
    };
    let reuse = params.laplacian == LaplacianKind::Uniform;
    let shared = if reuse { Some(factorize(&system(mesh)?)?) } else { None };
    let mut current = mesh.clone();
    for _ in 0..params.outer_rounds {
        let targets = project_to_isosurface(&current, field, &params.schedule, None)?.targets;
        check_targets(&current, &targets)?;
        let b = DMatrix::from_fn(2 * n, 3, |r, c| if r < n { 0.0 } else { targets[r - n][c] });
        let sol = match &shared {
            Some(f) => solve_with(f, &b)?,
            None => least_squares(&system(&current)?, &b)?,
        };
        let positions = (0..n).map(|i| Point::new(sol[(i, 0)], sol[(i, 1)], sol[(i, 2)])).collect();
        current = current.with_positions(positions)?;
    }
    Ok(current)
}
