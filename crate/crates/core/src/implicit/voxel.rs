use super::FieldError;
use crate::geom::{Aabb, Point, Vector};
use crate::stroke::Stroke;

pub const DEFAULT_RESOLUTION: usize = 128;

/// Points sampled along the input strokes before voxelization.
pub const STROKE_SAMPLES: usize = 3000;

/// Margin added on each side of the strokes' extent.
const MARGIN: f64 = 0.1;

/// Cell coordinates are rounded to this fraction of a cell before flooring,
/// so translation round-off cannot push a sample across a cell face.
const CELL_SNAP: f64 = 1.0 / (1u64 << 20) as f64;

/// Cube side used when all stroke points coincide.
const POINT_CUBE_SIDE: f64 = 1.0;

/// Binary occupancy of a cubic lattice of `resolution³` cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoxelGrid {
    resolution: usize,
    center: [u64; 3],
    side: u64,
    occupied: Vec<bool>,
}

impl VoxelGrid {
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn bbox(&self) -> Aabb {
        let c =
            Point::new(f64::from_bits(self.center[0]), f64::from_bits(self.center[1]), f64::from_bits(self.center[2]));
        let half = Vector::repeat(f64::from_bits(self.side) / 2.0);
        Aabb::new(c - half, c + half)
    }

    pub fn is_occupied(&self, x: usize, y: usize, z: usize) -> bool {
        self.occupied[x + self.resolution * (y + self.resolution * z)]
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    /// Occupied cell indices in x-fastest order.
    pub fn occupied_cells(&self) -> Vec<[usize; 3]> {
        let r = self.resolution;
        (0..self.occupied.len()).filter(|&i| self.occupied[i]).map(|i| [i % r, (i / r) % r, i / (r * r)]).collect()
    }

    /// Cells as a flat 0/1 array in x-fastest order.
    pub fn as_bytes(&self) -> Vec<u8> {
        self.occupied.iter().map(|&o| o as u8).collect()
    }
}

/// Cube centred on the strokes' bounding box with side `1.2 ×` its largest
/// extent (10% margin on each side).
pub fn stroke_bbox(strokes: &[Stroke]) -> Result<Aabb, FieldError> {
    let (c, side) = stroke_cube(strokes)?;
    Ok(Aabb::new(c - Vector::repeat(side / 2.0), c + Vector::repeat(side / 2.0)))
}

fn stroke_cube(strokes: &[Stroke]) -> Result<(Point, f64), FieldError> {
    let bb = Aabb::from_points(strokes.iter().flat_map(|s| s.points.iter())).ok_or(FieldError::NoStrokes)?;
    let ext = bb.extent();
    let largest = ext.x.max(ext.y).max(ext.z);
    let side = if largest > 0.0 { largest * (1.0 + 2.0 * MARGIN) } else { POINT_CUBE_SIDE };
    Ok((bb.center(), side))
}

/// Voxelizes [`STROKE_SAMPLES`] points spread uniformly by arc length over
/// all strokes (first and last points included) into a cube around them.
pub fn voxelize_strokes(strokes: &[Stroke], resolution: usize) -> Result<VoxelGrid, FieldError> {
    let (c, side) = stroke_cube(strokes)?;
    voxelize_about(strokes, resolution, c, side)
}

/// As [`voxelize_strokes`] with an explicit cube (the largest extent of
/// `bbox` is used as the side, centred on it). Samples outside the cube are
/// dropped.
pub fn voxelize_strokes_in(strokes: &[Stroke], resolution: usize, bbox: &Aabb) -> Result<VoxelGrid, FieldError> {
    let ext = bbox.extent();
    voxelize_about(strokes, resolution, bbox.center(), ext.x.max(ext.y).max(ext.z))
}

/// Cells are indexed relative to the cube centre so a point at the centre
/// lands exactly on the middle cell boundary.
fn voxelize_about(strokes: &[Stroke], resolution: usize, center: Point, side: f64) -> Result<VoxelGrid, FieldError> {
    if resolution == 0 {
        return Err(FieldError::BadDims([0; 3]));
    }
    if !(side > 0.0) || !side.is_finite() {
        return Err(FieldError::BadBbox);
    }
    let samples = sample_strokes(strokes, STROKE_SAMPLES)?;
    let mut occupied = vec![false; resolution.pow(3)];
    let cell = |c: f64, mid: f64| -> Option<usize> {
        let t = ((c - mid) / side + 0.5) * resolution as f64;
        let t = (t / CELL_SNAP).round() * CELL_SNAP;
        if !(0.0..=resolution as f64).contains(&t) {
            return None;
        }
        Some((t.floor() as usize).min(resolution - 1))
    };
    for p in samples {
        if let (Some(x), Some(y), Some(z)) = (cell(p.x, center.x), cell(p.y, center.y), cell(p.z, center.z)) {
            occupied[x + resolution * (y + resolution * z)] = true;
        }
    }
    Ok(VoxelGrid {
        resolution,
        center: [center.x.to_bits(), center.y.to_bits(), center.z.to_bits()],
        side: side.to_bits(),
        occupied,
    })
}

/// `count` points at uniform spacing along the concatenated strokes. If the
/// strokes have no length, their points are repeated cyclically.
pub(crate) fn sample_strokes(strokes: &[Stroke], count: usize) -> Result<Vec<Point>, FieldError> {
    let strokes: Vec<&Stroke> = strokes.iter().filter(|s| !s.is_empty()).collect();
    if strokes.is_empty() {
        return Err(FieldError::NoStrokes);
    }
    let lengths: Vec<f64> = strokes.iter().map(|s| s.length()).collect();
    let total: f64 = lengths.iter().sum();
    if total == 0.0 || count < 2 {
        let pts: Vec<Point> = strokes.iter().flat_map(|s| s.points.iter().copied()).collect();
        return Ok((0..count).map(|k| pts[k % pts.len()]).collect());
    }
    let mut out = Vec::with_capacity(count);
    let mut stroke = 0;
    let mut before = 0.0;
    for k in 0..count {
        let s = total * k as f64 / (count - 1) as f64;
        while stroke + 1 < strokes.len() && s > before + lengths[stroke] {
            before += lengths[stroke];
            stroke += 1;
        }
        out.push(strokes[stroke].point_at(s - before));
    }
    Ok(out)
}
