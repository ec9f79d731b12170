//! Initial shape generation from a closed silhouette in the sketch plane.
//!
//! The curve is triangulated, lifted slightly, welded with its mirror image
//! across `z = 0`, and inflated: per-vertex Laplacian magnitudes are diffused
//! from the silhouette over the mesh, turned into target Laplacians
//! `δ_i = A_i · m_i · n_i`, and vertex positions are solved so that their
//! Laplacians match `δ` while the silhouette stays pinned.
//!
//! With the mean-minus-center Laplacian a convex bulge has inward Laplacians,
//! so inflation uses *negative* magnitudes. [`generate_initial`] takes a
//! positive inflation magnitude and negates it internally.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, Point2};
use spade::{ConstrainedDelaunayTriangulation, Triangulation};
use thiserror::Error;

use crate::geom::{Point, Vector};
use crate::linsolve::{least_squares, SolveError, SparseMatrix};
use crate::mesh::{
    laplacian, mirror_weld, ring_distances, split_boundary_chords, LaplacianKind, MeshError, MirrorPlane, TriMesh,
};

/// Minimum number of points of a resampled silhouette.
pub const MIN_RESAMPLED_POINTS: usize = 8;

/// Resampling spacing as a fraction of the curve's bounding-box diagonal.
pub const RESAMPLE_FRACTION: f64 = 1.0 / 64.0;

/// Dimensionless inflation strength; [`default_lm`] divides it by the curve
/// diagonal. Calibrated so a circle inflates to a thickness of about 0.55
/// of its diameter.
pub const LM_SCALE: f64 = 1.79;

/// Interior lift before welding, in units of the resampling length per ring.
const LIFT_PER_RING: f64 = 0.25;

const MAX_REFINE_ROUNDS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SilhouetteError {
    #[error("silhouette needs at least 3 distinct points, got {found}")]
    TooFewPoints { found: usize },
    #[error("silhouette contains a non-finite coordinate at point {index}")]
    NonFinite { index: usize },
    #[error("silhouette encloses no area")]
    ZeroArea,
    #[error("silhouette edges {first} and {second} intersect near ({x}, {y})")]
    SelfIntersection { first: usize, second: usize, x: f64, y: f64 },
    #[error("resample length must be positive, got {0}")]
    BadResampleLength(f64),
    #[error("triangulation failed: {0}")]
    Triangulation(String),
    #[error("no constrained vertices")]
    NoConstraints,
    #[error("per-vertex input has {found} entries for {expected} vertices")]
    LengthMismatch { expected: usize, found: usize },
    #[error("constrained vertex {index} outside a mesh of {count}")]
    ConstraintOutOfRange { index: usize, count: usize },
    #[error("non-finite value for vertex {index}")]
    NonFiniteValue { index: usize },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("{stage}: {source}")]
    Stage {
        stage: InitStage,
        #[source]
        source: Box<SilhouetteError>,
    },
}

/// Pipeline stage reported when [`generate_initial`] fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStage {
    Curve,
    Triangulate,
    Mirror,
    Diffuse,
    Solve,
}

impl std::fmt::Display for InitStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            InitStage::Curve => "curve",
            InitStage::Triangulate => "triangulate",
            InitStage::Mirror => "mirror",
            InitStage::Diffuse => "diffuse",
            InitStage::Solve => "solve",
        };
        f.write_str(name)
    }
}

trait StageExt<T> {
    fn stage(self, stage: InitStage) -> Result<T, SilhouetteError>;
}

impl<T, E: Into<SilhouetteError>> StageExt<T> for Result<T, E> {
    fn stage(self, stage: InitStage) -> Result<T, SilhouetteError> {
        self.map_err(|e| SilhouetteError::Stage { stage, source: Box::new(e.into()) })
    }
}

/// A simple, counterclockwise closed polygon in the sketch plane.
#[derive(Debug, Clone, PartialEq)]
pub struct SilhouetteCurve {
    points: Vec<Point2<f64>>,
    resample_len: f64,
}

impl SilhouetteCurve {
    /// Cleans up raw samples: drops consecutive duplicates (including a
    /// repeated closing point), enforces counterclockwise order and rejects
    /// self-intersections. `resample_len` defaults to 1/64 of the bbox
    /// diagonal.
    pub fn new(raw: &[[f64; 2]]) -> Result<Self, SilhouetteError> {
        if let Some(index) = raw.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(SilhouetteError::NonFinite { index });
        }
        let mut points: Vec<Point2<f64>> = Vec::with_capacity(raw.len());
        for p in raw {
            let q = Point2::new(p[0], p[1]);
            if points.last() != Some(&q) {
                points.push(q);
            }
        }
        while points.len() > 1 && points.first() == points.last() {
            points.pop();
        }
        if points.len() < 3 {
            return Err(SilhouetteError::TooFewPoints { found: points.len() });
        }
        check_simple(&points)?;
        let area = signed_area(&points);
        if area == 0.0 {
            return Err(SilhouetteError::ZeroArea);
        }
        if area < 0.0 {
            points.reverse();
        }
        let diag = bbox_diagonal(&points);
        Ok(Self { points, resample_len: diag * RESAMPLE_FRACTION })
    }

    pub fn with_resample_len(mut self, len: f64) -> Result<Self, SilhouetteError> {
        if !(len > 0.0) {
            return Err(SilhouetteError::BadResampleLength(len));
        }
        self.resample_len = len;
        Ok(self)
    }

    /// Disables interior refinement in [`triangulate_polygon`].
    pub fn without_refinement(mut self) -> Self {
        self.resample_len = f64::INFINITY;
        self
    }

    pub fn points(&self) -> &[Point2<f64>] {
        &self.points
    }

    pub fn resample_len(&self) -> f64 {
        self.resample_len
    }

    pub fn bbox_diagonal(&self) -> f64 {
        bbox_diagonal(&self.points)
    }

    /// Shoelace area (positive).
    pub fn area(&self) -> f64 {
        signed_area(&self.points)
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.points.len();
        (0..n).map(|i| (self.points[(i + 1) % n] - self.points[i]).norm()).sum()
    }

    pub fn contains(&self, p: &Point2<f64>) -> bool {
        point_in_polygon(&self.points, p)
    }

    /// Uniform arc-length resampling at `resample_len` spacing, with at least
    /// [`MIN_RESAMPLED_POINTS`] points. The first point is kept.
    pub fn resampled(&self) -> Result<Self, SilhouetteError> {
        let perimeter = self.perimeter();
        let target = if self.resample_len.is_finite() { self.resample_len } else { perimeter };
        let count = ((perimeter / target).ceil() as usize).max(MIN_RESAMPLED_POINTS);
        let step = perimeter / count as f64;
        let n = self.points.len();
        let mut out = Vec::with_capacity(count);
        let mut seg = 0;
        let mut seg_start = 0.0;
        for k in 0..count {
            let s = k as f64 * step;
            loop {
                let len = (self.points[(seg + 1) % n] - self.points[seg]).norm();
                if s <= seg_start + len || seg == n - 1 {
                    let t = if len > 0.0 { ((s - seg_start) / len).clamp(0.0, 1.0) } else { 0.0 };
                    let a = self.points[seg];
                    let b = self.points[(seg + 1) % n];
                    out.push(a + (b - a) * t);
                    break;
                }
                seg_start += len;
                seg += 1;
            }
        }
        check_simple(&out)?;
        Ok(Self { points: out, resample_len: self.resample_len })
    }
}

/// Diffused Laplacian magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct LmField {
    pub values: Vec<f64>,
    pub constrained: BTreeMap<usize, f64>,
}

/// Constrained Delaunay triangulation of the curve at `z = 0`, faces
/// counterclockwise seen from `+z`.
///
/// Polygon edges longer than `resample_len` are split, a triangular lattice
/// of Steiner points with that spacing fills the interior, and interior edges
/// still longer than `resample_len` are split at their midpoints until none
/// remain. The boundary loop occupies the leading vertex indices in
/// counterclockwise order.
pub fn triangulate_polygon(curve: &SilhouetteCurve) -> Result<TriMesh, SilhouetteError> {
    let h = curve.resample_len;
    let mut boundary = Vec::new();
    let n = curve.points.len();
    for i in 0..n {
        let a = curve.points[i];
        let b = curve.points[(i + 1) % n];
        let pieces = if h.is_finite() { ((b - a).norm() / h).ceil().max(1.0) as usize } else { 1 };
        for k in 0..pieces {
            boundary.push(a + (b - a) * (k as f64 / pieces as f64));
        }
    }
    let mut vertices: Vec<spade::Point2<f64>> = boundary.iter().map(|p| spade::Point2::new(p.x, p.y)).collect();
    if h.is_finite() {
        vertices.extend(lattice_points(&boundary, h).into_iter().map(|p| spade::Point2::new(p.x, p.y)));
    }
    let b = boundary.len();
    let edges: Vec<[usize; 2]> = (0..b).map(|i| [i, (i + 1) % b]).collect();
    let mut cdt: ConstrainedDelaunayTriangulation<spade::Point2<f64>> =
        ConstrainedDelaunayTriangulation::bulk_load_cdt(vertices, edges)
            .map_err(|e| SilhouetteError::Triangulation(format!("{e:?}")))?;
    if cdt.num_vertices() < b {
        return Err(SilhouetteError::Triangulation("duplicate boundary vertices".into()));
    }

    if h.is_finite() {
        for _ in 0..MAX_REFINE_ROUNDS {
            let (_, faces) = extract_inside(&cdt);
            let mut long: Vec<(usize, usize)> = Vec::new();
            for f in &faces {
                for k in 0..3 {
                    let (u, v) = (f[k], f[(k + 1) % 3]);
                    let is_boundary = u < b && v < b && ((u + 1) % b == v || (v + 1) % b == u);
                    if u < v && !is_boundary && vertex_distance(&cdt, u, v) > h * (1.0 + 1e-9) {
                        long.push((u, v));
                    }
                }
            }
            if long.is_empty() {
                break;
            }
            long.sort_unstable();
            long.dedup();
            for (u, v) in long {
                let (pu, pv) = (vertex_position(&cdt, u), vertex_position(&cdt, v));
                let m = spade::Point2::new(0.5 * (pu.x + pv.x), 0.5 * (pu.y + pv.y));
                cdt.insert(m).map_err(|e| SilhouetteError::Triangulation(format!("{e:?}")))?;
            }
        }
    }

    let (positions, faces) = extract_inside(&cdt);
    let positions = positions.into_iter().map(|p| Point::new(p.x, p.y, 0.0)).collect();
    let (mesh, removed) = TriMesh::remove_degenerate_faces(positions, faces)?;
    if !removed.is_empty() {
        log::warn!("triangulation dropped {} sliver face(s)", removed.len());
    }
    Ok(mesh)
}

fn vertex_position(cdt: &ConstrainedDelaunayTriangulation<spade::Point2<f64>>, i: usize) -> spade::Point2<f64> {
    *cdt.vertex(spade::handles::FixedVertexHandle::from_index(i)).data()
}

fn vertex_distance(cdt: &ConstrainedDelaunayTriangulation<spade::Point2<f64>>, u: usize, v: usize) -> f64 {
    let (a, b) = (vertex_position(cdt, u), vertex_position(cdt, v));
    (a.x - b.x).hypot(a.y - b.y)
}

/// Vertices in triangulation order and the faces enclosed by the constraint
/// loop: faces reachable from the outer face without crossing a constraint
/// edge are discarded.
fn extract_inside(cdt: &ConstrainedDelaunayTriangulation<spade::Point2<f64>>) -> (Vec<Point2<f64>>, Vec<[usize; 3]>) {
    let positions: Vec<Point2<f64>> = cdt.vertices().map(|v| Point2::new(v.position().x, v.position().y)).collect();
    let mut outside = vec![false; cdt.num_all_faces()];
    let mut stack = Vec::new();
    for face in cdt.inner_faces() {
        let seeded = face.adjacent_edges().iter().any(|e| e.rev().face().is_outer() && !e.is_constraint_edge());
        if seeded {
            outside[face.fix().index()] = true;
            stack.push(face.fix());
        }
    }
    while let Some(f) = stack.pop() {
        for e in cdt.face(f).adjacent_edges() {
            if e.is_constraint_edge() {
                continue;
            }
            if let Some(inner) = e.rev().face().as_inner() {
                if !outside[inner.fix().index()] {
                    outside[inner.fix().index()] = true;
                    stack.push(inner.fix());
                }
            }
        }
    }
    let mut faces = Vec::new();
    for face in cdt.inner_faces() {
        if outside[face.fix().index()] {
            continue;
        }
        let [a, b, c] = face.vertices().map(|v| v.fix().index());
        let cross = (positions[b] - positions[a]).perp(&(positions[c] - positions[a]));
        faces.push(if cross > 0.0 { [a, b, c] } else { [a, c, b] });
    }
    faces.sort_unstable();
    (positions, faces)
}

/// Triangular lattice with spacing `h`, restricted to points inside the
/// polygon and at least `h/2` from its boundary.
fn lattice_points(polygon: &[Point2<f64>], h: f64) -> Vec<Point2<f64>> {
    let (mut lo, mut hi) = (polygon[0], polygon[0]);
    for p in polygon {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let dy = h * 3f64.sqrt() / 2.0;
    let mut out = Vec::new();
    let rows = ((hi.y - lo.y) / dy).floor() as usize;
    for r in 0..=rows {
        let y = lo.y + r as f64 * dy + 0.5 * ((hi.y - lo.y) - rows as f64 * dy);
        let shift = if r % 2 == 1 { 0.5 * h } else { 0.0 };
        let cols = ((hi.x - lo.x) / h).floor() as usize + 1;
        for c in 0..=cols {
            let p = Point2::new(lo.x + shift + c as f64 * h, y);
            if point_in_polygon(polygon, &p) && boundary_distance(polygon, &p) >= 0.5 * h {
                out.push(p);
            }
        }
    }
    out
}

fn boundary_distance(polygon: &[Point2<f64>], p: &Point2<f64>) -> f64 {
    let n = polygon.len();
    (0..n)
        .map(|i| {
            let (a, b) = (polygon[i], polygon[(i + 1) % n]);
            let ab = b - a;
            let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
            (p - (a + ab * t)).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

fn signed_area(points: &[Point2<f64>]) -> f64 {
    let n = points.len();
    0.5 * (0..n).map(|i| points[i].coords.perp(&points[(i + 1) % n].coords)).sum::<f64>()
}

fn bbox_diagonal(points: &[Point2<f64>]) -> f64 {
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (hi - lo).norm()
}

/// Crossing-number point-in-polygon test.
pub fn point_in_polygon(polygon: &[Point2<f64>], p: &Point2<f64>) -> bool {
    let n = polygon.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[j]);
        if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn check_simple(points: &[Point2<f64>]) -> Result<(), SilhouetteError> {
    let n = points.len();
    for i in 0..n {
        let (a, b) = (points[i], points[(i + 1) % n]);
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (points[j], points[(j + 1) % n]);
            if let Some(x) = segment_intersection(&a, &b, &c, &d) {
                return Err(SilhouetteError::SelfIntersection { first: i, second: j, x: x.x, y: x.y });
            }
        }
    }
    Ok(())
}

fn segment_intersection(a: &Point2<f64>, b: &Point2<f64>, c: &Point2<f64>, d: &Point2<f64>) -> Option<Point2<f64>> {
    let r = b - a;
    let s = d - c;
    // Orientation tests with a tolerance relative to the segment lengths;
    // nearly collinear segments fall through to the interval overlap test.
    let eps = 1e-12 * (r.norm_squared() + s.norm_squared());
    let orient = |p: &Point2<f64>, q: &Point2<f64>, x: &Point2<f64>| {
        let v = (q - p).perp(&(x - p));
        if v.abs() <= eps {
            0.0
        } else {
            v.signum()
        }
    };
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    if o1 == 0.0 && o2 == 0.0 {
        let rr = r.norm_squared();
        if rr == 0.0 {
            return None;
        }
        let t0 = (c - a).dot(&r) / rr;
        let t1 = (d - a).dot(&r) / rr;
        let (lo, hi) = (t0.min(t1), t0.max(t1));
        return (hi >= 0.0 && lo <= 1.0).then(|| a + r * lo.max(0.0));
    }
    if o1 * o2 > 0.0 || o3 * o4 > 0.0 {
        return None;
    }
    let denom = r.perp(&s);
    if denom == 0.0 {
        return None;
    }
    let t = ((c - a).perp(&s) / denom).clamp(0.0, 1.0);
    Some(a + r * t)
}

/// Minimizes `Σ‖L m‖² + Σ_c (m_c − m'_c)²` over all vertices.
pub fn diffuse_magnitudes(mesh: &TriMesh, constrained: &BTreeMap<usize, f64>) -> Result<LmField, SilhouetteError> {
    if constrained.is_empty() {
        return Err(SilhouetteError::NoConstraints);
    }
    let n = mesh.vertex_count();
    for (&index, &value) in constrained {
        if index >= n {
            return Err(SilhouetteError::ConstraintOutOfRange { index, count: n });
        }
        if !value.is_finite() {
            return Err(SilhouetteError::NonFiniteValue { index });
        }
    }
    let l = laplacian(mesh, LaplacianKind::Uniform)?;
    let (a, b) = stack_with_pins(&l, n, constrained.iter().map(|(&i, &v)| (i, [v])), 1.0)?;
    let x = least_squares(&a, &b)?;
    let values: Vec<f64> = x.column(0).iter().copied().collect();
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(SilhouetteError::NonFiniteValue { index });
    }
    Ok(LmField { values, constrained: constrained.clone() })
}

/// `δ_i = A_i · m_i · n_i`.
pub fn target_laplacians(mesh: &TriMesh, m: &LmField) -> Result<Vec<Vector>, SilhouetteError> {
    if m.values.len() != mesh.vertex_count() {
        return Err(SilhouetteError::LengthMismatch { expected: mesh.vertex_count(), found: m.values.len() });
    }
    if let Some(index) = m.values.iter().position(|v| !v.is_finite()) {
        return Err(SilhouetteError::NonFiniteValue { index });
    }
    let areas = mesh.vertex_areas();
    let normals = mesh.vertex_normals();
    Ok((0..mesh.vertex_count()).map(|i| normals[i] * (areas[i] * m.values[i])).collect())
}

/// Options for [`solve_positions_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionSolve {
    /// Weight of each pin term.
    pub pin_weight: f64,
    /// Keep the Laplacian rows of pinned vertices in the objective.
    pub pinned_laplacian_rows: bool,
}

impl Default for PositionSolve {
    fn default() -> Self {
        Self { pin_weight: 1.0, pinned_laplacian_rows: false }
    }
}

/// Minimizes `Σ_{i∉C} ‖L v_i − δ_i‖² + Σ_{c∈C} ‖v_c − v'_c‖²`; connectivity
/// unchanged. Pinned vertices are positioned by their pin, so their own
/// Laplacian rows are left out and free vertices satisfy `L v = δ` exactly
/// whenever the system is square.
pub fn solve_positions(
    mesh: &TriMesh,
    delta: &[Vector],
    pinned: &BTreeMap<usize, Point>,
) -> Result<TriMesh, SilhouetteError> {
    solve_positions_with(mesh, delta, pinned, PositionSolve::default())
}

/// [`solve_positions`] with explicit pin weight and a switch for including
/// the pinned vertices' Laplacian rows (the sum over all vertices).
pub fn solve_positions_with(
    mesh: &TriMesh,
    delta: &[Vector],
    pinned: &BTreeMap<usize, Point>,
    opts: PositionSolve,
) -> Result<TriMesh, SilhouetteError> {
    let n = mesh.vertex_count();
    if delta.len() != n {
        return Err(SilhouetteError::LengthMismatch { expected: n, found: delta.len() });
    }
    if pinned.is_empty() {
        return Err(SilhouetteError::NoConstraints);
    }
    for (&index, p) in pinned {
        if index >= n {
            return Err(SilhouetteError::ConstraintOutOfRange { index, count: n });
        }
        if !p.coords.iter().all(|c| c.is_finite()) {
            return Err(SilhouetteError::NonFiniteValue { index });
        }
    }
    let mut l = laplacian(mesh, LaplacianKind::Uniform)?;
    if !opts.pinned_laplacian_rows {
        let kept: Vec<(usize, usize, f64)> = l.entries().filter(|(r, _, _)| !pinned.contains_key(r)).collect();
        l = SparseMatrix::from_triplets(n, n, kept)?;
    }
    let (a, mut b) = stack_with_pins(&l, n, pinned.iter().map(|(&i, p)| (i, [p.x, p.y, p.z])), opts.pin_weight)?;
    for (i, d) in delta.iter().enumerate() {
        if opts.pinned_laplacian_rows || !pinned.contains_key(&i) {
            for c in 0..3 {
                b[(i, c)] = d[c];
            }
        }
    }
    let x = least_squares(&a, &b)?;
    let positions = (0..n).map(|i| Point::new(x[(i, 0)], x[(i, 1)], x[(i, 2)])).collect();
    Ok(mesh.with_positions(positions)?)
}

/// Stacks `L` over weighted selector rows; right-hand side has zeros for the
/// Laplacian block and the weighted pin values below.
fn stack_with_pins<const D: usize>(
    l: &SparseMatrix,
    n: usize,
    pins: impl Iterator<Item = (usize, [f64; D])>,
    weight: f64,
) -> Result<(SparseMatrix, DMatrix<f64>), SilhouetteError> {
    let w = weight.sqrt();
    let mut triplets: Vec<(usize, usize, f64)> = l.entries().collect();
    let mut rhs_rows: Vec<[f64; D]> = Vec::new();
    for (k, (i, value)) in pins.enumerate() {
        triplets.push((n + k, i, w));
        rhs_rows.push(value.map(|v| v * w));
    }
    let rows = n + rhs_rows.len();
    let a = SparseMatrix::from_triplets(rows, n, triplets)?;
    let mut b = DMatrix::zeros(rows, D);
    for (k, row) in rhs_rows.iter().enumerate() {
        for c in 0..D {
            b[(n + k, c)] = row[c];
        }
    }
    Ok((a, b))
}

/// Default inflation magnitude for a curve: [`LM_SCALE`] over its diagonal.
pub fn default_lm(curve: &SilhouetteCurve) -> f64 {
    LM_SCALE / curve.bbox_diagonal()
}

/// Triangulate, mirror, diffuse and solve. `lm` is the inflation magnitude
/// (positive inflates outward); silhouette vertices are constrained to `−lm`
/// under the mean-minus-center Laplacian and pinned to their sketch
/// positions.
pub fn generate_initial(curve: &SilhouetteCurve, lm: f64) -> Result<TriMesh, SilhouetteError> {
    if !lm.is_finite() {
        return Err(SilhouetteError::NonFiniteValue { index: 0 }).stage(InitStage::Curve);
    }
    let resampled = curve.resampled().stage(InitStage::Curve)?;
    let planar = triangulate_polygon(&resampled).stage(InitStage::Triangulate)?;
    let planar = split_boundary_chords(&planar).stage(InitStage::Triangulate)?;

    let boundary: Vec<usize> = planar.boundary_edges().iter().map(|&(a, _)| a).collect();
    let rings = ring_distances(&planar, boundary.iter().copied());
    let lift = LIFT_PER_RING * resampled.resample_len().min(resampled.perimeter());
    let lifted: Vec<Point> =
        planar.positions().iter().zip(&rings).map(|(p, &r)| Point::new(p.x, p.y, lift * r.min(4) as f64)).collect();
    let half = planar.with_positions(lifted).stage(InitStage::Mirror)?;
    let closed = mirror_weld(&half, &MirrorPlane::xy()).stage(InitStage::Mirror)?;

    let constrained: BTreeMap<usize, f64> = boundary.iter().map(|&i| (i, -lm)).collect();
    let field = diffuse_magnitudes(&closed, &constrained).stage(InitStage::Diffuse)?;
    let delta = target_laplacians(&closed, &field).stage(InitStage::Solve)?;
    let pinned: BTreeMap<usize, Point> = boundary.iter().map(|&i| (i, closed.positions()[i])).collect();
    solve_positions(&closed, &delta, &pinned).stage(InitStage::Solve)
}
