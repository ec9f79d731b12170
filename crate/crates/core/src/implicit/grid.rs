use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rayon::prelude::*;

use super::{FieldError, OccupancyField};
use crate::geom::{Aabb, Point, Vector};

pub const GRID_MAGIC: &[u8; 4] = b"SMGF";
pub const GRID_VERSION: u32 = 1;

/// Fractional lattice coordinates this close to a node snap onto it, so
/// evaluating at a node returns the stored value exactly.
const NODE_SNAP: f64 = 1e-9;

/// Occupancy sampled on the nodes of a regular lattice spanning `bbox`,
/// interpolated trilinearly. Queries outside `bbox` are clamped to it.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    dims: [usize; 3],
    bbox: Aabb,
    values: Vec<f32>,
}

impl GridField {
    /// `values` in x-fastest order: index `x + nx·(y + ny·z)`.
    pub fn new(dims: [usize; 3], bbox: Aabb, values: Vec<f32>) -> Result<Self, FieldError> {
        if dims.iter().any(|&d| d < 2) {
            return Err(FieldError::BadDims(dims));
        }
        let ext = bbox.extent();
        if !ext.iter().all(|e| *e > 0.0 && e.is_finite()) {
            return Err(FieldError::BadBbox);
        }
        let expected = dims[0] * dims[1] * dims[2];
        if values.len() != expected {
            return Err(FieldError::ValueCount { dims, found: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(FieldError::ValueRange { index, value: values[index] });
        }
        Ok(Self { dims, bbox, values })
    }

    /// Samples `f` at every node (in parallel; the result does not depend on
    /// scheduling).
    pub fn from_fn(dims: [usize; 3], bbox: Aabb, f: impl Fn(&Point) -> f64 + Sync) -> Result<Self, FieldError> {
        if dims.iter().any(|&d| d < 2) {
            return Err(FieldError::BadDims(dims));
        }
        let spacing = spacing(dims, &bbox);
        let values = (0..dims[0] * dims[1] * dims[2])
            .into_par_iter()
            .map(|idx| {
                let (x, y, z) = (idx % dims[0], (idx / dims[0]) % dims[1], idx / (dims[0] * dims[1]));
                let p = node_position(&bbox, &spacing, [x, y, z]);
                f(&p).clamp(0.0, 1.0) as f32
            })
            .collect();
        Self::new(dims, bbox, values)
    }

    /// Samples another field on a lattice over its own bbox.
    pub fn bake(field: &dyn OccupancyField, dims: [usize; 3]) -> Result<Self, FieldError> {
        Self::from_fn(dims, field.bbox(), |p| field.eval(p))
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn value(&self, x: usize, y: usize, z: usize) -> f32 {
        self.values[x + self.dims[0] * (y + self.dims[1] * z)]
    }

    pub fn spacing(&self) -> Vector {
        spacing(self.dims, &self.bbox)
    }

    pub fn node_position(&self, x: usize, y: usize, z: usize) -> Point {
        node_position(&self.bbox, &self.spacing(), [x, y, z])
    }

    /// Whether `p` lies inside the lattice domain.
    pub fn contains(&self, p: &Point) -> bool {
        self.bbox.contains(p)
    }
}

fn spacing(dims: [usize; 3], bbox: &Aabb) -> Vector {
    let ext = bbox.extent();
    Vector::new(ext.x / (dims[0] - 1) as f64, ext.y / (dims[1] - 1) as f64, ext.z / (dims[2] - 1) as f64)
}

fn node_position(bbox: &Aabb, h: &Vector, idx: [usize; 3]) -> Point {
    Point::new(bbox.min.x + idx[0] as f64 * h.x, bbox.min.y + idx[1] as f64 * h.y, bbox.min.z + idx[2] as f64 * h.z)
}

/// Cell index and fractional offset along one axis.
fn axis_coord(t: f64, n: usize) -> (usize, f64) {
    let t = t.clamp(0.0, (n - 1) as f64);
    let nearest = t.round();
    if (t - nearest).abs() <= NODE_SNAP {
        let i = nearest as usize;
        return if i == n - 1 { (n - 2, 1.0) } else { (i, 0.0) };
    }
    let i = (t.floor() as usize).min(n - 2);
    (i, t - i as f64)
}

impl OccupancyField for GridField {
    fn eval(&self, p: &Point) -> f64 {
        let h = self.spacing();
        let q = self.bbox.clamp(p);
        let (i, fx) = axis_coord((q.x - self.bbox.min.x) / h.x, self.dims[0]);
        let (j, fy) = axis_coord((q.y - self.bbox.min.y) / h.y, self.dims[1]);
        let (k, fz) = axis_coord((q.z - self.bbox.min.z) / h.z, self.dims[2]);
        let v = |a: usize, b: usize, c: usize| self.value(i + a, j + b, k + c) as f64;
        let lerp = |a: f64, b: f64, t: f64| {
            if t == 0.0 {
                a
            } else if t == 1.0 {
                b
            } else {
                a + (b - a) * t
            }
        };
        let c00 = lerp(v(0, 0, 0), v(1, 0, 0), fx);
        let c10 = lerp(v(0, 1, 0), v(1, 1, 0), fx);
        let c01 = lerp(v(0, 0, 1), v(1, 0, 1), fx);
        let c11 = lerp(v(0, 1, 1), v(1, 1, 1), fx);
        let c0 = lerp(c00, c10, fy);
        let c1 = lerp(c01, c11, fy);
        lerp(c0, c1, fz)
    }

    fn bbox(&self) -> Aabb {
        self.bbox
    }
}

pub fn write_grid(field: &GridField, mut w: impl Write) -> Result<(), FieldError> {
    w.write_all(GRID_MAGIC)?;
    w.write_u32::<LittleEndian>(GRID_VERSION)?;
    for d in field.dims {
        w.write_u32::<LittleEndian>(d as u32)?;
    }
    for c in field.bbox.min.iter().chain(field.bbox.max.iter()) {
        w.write_f64::<LittleEndian>(*c)?;
    }
    for v in &field.values {
        w.write_f32::<LittleEndian>(*v)?;
    }
    Ok(())
}

pub fn read_grid(mut r: impl Read) -> Result<GridField, FieldError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != GRID_MAGIC {
        return Err(FieldError::Format(format!("bad magic {magic:?}")));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != GRID_VERSION {
        return Err(FieldError::Version(version));
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        *d = r.read_u32::<LittleEndian>()? as usize;
    }
    let mut b = [0f64; 6];
    for c in &mut b {
        *c = r.read_f64::<LittleEndian>()?;
    }
    let count = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).ok_or(FieldError::BadDims(dims))?;
    let mut values = vec![0f32; count];
    r.read_f32_into::<LittleEndian>(&mut values)?;
    let bbox = Aabb::new(Point::new(b[0], b[1], b[2]), Point::new(b[3], b[4], b[5]));
    GridField::new(dims, bbox, values)
}

pub fn save_grid(field: &GridField, path: impl AsRef<Path>) -> Result<(), FieldError> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_grid(field, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<GridField, FieldError> {
    let file = std::fs::File::open(path)?;
    read_grid(std::io::BufReader::new(file))
}
