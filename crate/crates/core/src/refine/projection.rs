use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RefineError;
use crate::geom::{Point, Vector};
use crate::implicit::OccupancyField;
use crate::mesh::{TriMesh, VertexRegion};

pub const ITERATIONS: usize = 5;
pub const STEP0: f64 = 0.1;
pub const STEP_RATIO: f64 = 0.5;
pub const ALPHA: f64 = crate::implicit::ALPHA;

/// Direction of a step relative to `sign(f − α)` and the outward normal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSign {
    /// `v + d·sign(f − α)·n`: inside points (occupancy above α) move out,
    /// outside points move in.
    #[default]
    TowardSurface,
    /// `v − d·sign(f − α)·n`, which moves away from the level set under the
    /// inside-is-one convention.
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSchedule {
    pub iters: usize,
    pub step0: f64,
    pub ratio: f64,
    pub alpha: f64,
    #[serde(default)]
    pub sign: StepSign,
    /// Recompute vertex normals after every iteration instead of freezing
    /// them at entry.
    #[serde(default)]
    pub recompute_normals: bool,
}

impl Default for ProjectionSchedule {
    fn default() -> Self {
        Self {
            iters: ITERATIONS,
            step0: STEP0,
            ratio: STEP_RATIO,
            alpha: ALPHA,
            sign: StepSign::TowardSurface,
            recompute_normals: false,
        }
    }
}

impl ProjectionSchedule {
    pub fn validate(&self) -> Result<(), RefineError> {
        if self.iters == 0 {
            return Err(RefineError::BadSchedule("iters must be at least 1"));
        }
        if !(self.step0 > 0.0 && self.step0.is_finite()) {
            return Err(RefineError::BadSchedule("step0 must be positive"));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(RefineError::BadSchedule("ratio must lie in (0, 1)"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(RefineError::BadSchedule("alpha must lie in (0, 1)"));
        }
        Ok(())
    }

    /// `step0 · ratio^(iters−1)`: the smallest step the schedule can reach.
    pub fn final_step(&self) -> f64 {
        self.step0 * self.ratio.powi(self.iters as i32 - 1)
    }
}

/// Result of a projection: per-vertex targets, vertices whose walk left the
/// field's domain (evaluated clamped to it), and optional trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub targets: Vec<Point>,
    pub out_of_domain: Vec<usize>,
    /// `iters + 1` positions per vertex when tracing was requested.
    pub trajectories: Vec<Vec<Point>>,
}

#[derive(Debug, Clone, Copy)]
struct Walker {
    pos: Point,
    step: f64,
    prev: i8,
    clamped: bool,
}

impl Walker {
    fn new(pos: Point, sched: &ProjectionSchedule) -> Self {
        Self { pos, step: sched.step0, prev: 0, clamped: false }
    }

    fn advance(&mut self, normal: &Vector, field: &dyn OccupancyField, sched: &ProjectionSchedule) {
        let bbox = field.bbox();
        let q = if bbox.contains(&self.pos) {
            self.pos
        } else {
            self.clamped = true;
            bbox.clamp(&self.pos)
        };
        let f = field.eval(&q);
        let s: i8 = if f > sched.alpha {
            1
        } else if f < sched.alpha {
            -1
        } else {
            0
        };
        if s != 0 && self.prev != 0 && s != self.prev {
            self.step *= sched.ratio;
        }
        self.prev = s;
        let d = match sched.sign {
            StepSign::TowardSurface => self.step * s as f64,
            StepSign::AsPrinted => -self.step * s as f64,
        };
        self.pos += normal * d;
    }
}

/// Walks each masked point along its fixed normal through the schedule.
/// Unmasked points are returned unchanged.
pub fn project_points(
    points: &[Point],
    normals: &[Vector],
    mask: Option<&[bool]>,
    field: &dyn OccupancyField,
    sched: &ProjectionSchedule,
    trace: bool,
) -> Result<Projection, RefineError> {
    sched.validate()?;
    if normals.len() != points.len() {
        return Err(RefineError::TargetCount { expected: points.len(), found: normals.len() });
    }
    let active = |i: usize| mask.is_none_or(|m| m[i]);
    let walks: Vec<(Point, bool, Vec<Point>)> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            if !active(i) {
                return (points[i], false, Vec::new());
            }
            let mut w = Walker::new(points[i], sched);
            let mut path = if trace { vec![w.pos] } else { Vec::new() };
            for _ in 0..sched.iters {
                w.advance(&normals[i], field, sched);
                if trace {
                    path.push(w.pos);
                }
            }
            (w.pos, w.clamped, path)
        })
        .collect();
    let mut out =
        Projection { targets: Vec::with_capacity(points.len()), out_of_domain: Vec::new(), trajectories: Vec::new() };
    for (i, (p, clamped, path)) in walks.into_iter().enumerate() {
        out.targets.push(p);
        if clamped {
            out.out_of_domain.push(i);
        }
        if trace {
            out.trajectories.push(path);
        }
    }
    Ok(out)
}

/// Per-vertex isosurface targets for the vertices of `region` (all vertices
/// when `None`), using area-weighted vertex normals.
pub fn project_to_isosurface(
    mesh: &TriMesh,
    field: &dyn OccupancyField,
    sched: &ProjectionSchedule,
    region: Option<&VertexRegion>,
) -> Result<Projection, RefineError> {
    let mask = region.map(|r| r.mask(mesh.vertex_count()));
    if !sched.recompute_normals {
        return project_points(mesh.positions(), &mesh.vertex_normals(), mask.as_deref(), field, sched, false);
    }
    sched.validate()?;
    let mut walkers: Vec<Walker> = mesh.positions().iter().map(|p| Walker::new(*p, sched)).collect();
    for _ in 0..sched.iters {
        let current = mesh.with_positions(walkers.iter().map(|w| w.pos).collect())?;
        let normals = current.vertex_normals();
        walkers.par_iter_mut().enumerate().for_each(|(i, w)| {
            if mask.as_ref().is_none_or(|m| m[i]) {
                w.advance(&normals[i], field, sched);
            }
        });
    }
    Ok(Projection {
        targets: walkers.iter().map(|w| w.pos).collect(),
        out_of_domain: (0..walkers.len()).filter(|&i| walkers[i].clamped).collect(),
        trajectories: Vec::new(),
    })
}
