use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{mesh_to_field, FieldError, OccupancyField, ALPHA, ANALYTIC_FALLOFF_FRACTION};
use crate::geom::{Point, Vector};
use crate::mesh::TriMesh;

/// Labelled training points: the first `near_count` are near-surface
/// samples, the rest uniform in the mesh bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub points: Vec<Point>,
    pub occupancy: Vec<f64>,
    /// 1 where occupancy ≥ 0.5.
    pub labels: Vec<u8>,
    pub near_count: usize,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn uniform_count(&self) -> usize {
        self.points.len() - self.near_count
    }
}

/// Draws `n` points: `round(n · near_fraction)` area-weighted surface points
/// offset by isotropic Gaussian noise of deviation `near_sigma`, then uniform
/// points in the bounding box. Labels come from the mesh's occupancy at the
/// 0.5 level. Deterministic for a given `seed`.
pub fn sample_points(
    mesh: &TriMesh,
    n: usize,
    near_fraction: f64,
    near_sigma: f64,
    seed: u64,
) -> Result<SampleSet, FieldError> {
    if !(0.0..=1.0).contains(&near_fraction) || !(near_sigma >= 0.0) {
        return Err(FieldError::BadSampling { n, near_fraction });
    }
    let field = mesh_to_field(mesh, ANALYTIC_FALLOFF_FRACTION * mesh.bbox_diagonal())?;
    let near_count = (n as f64 * near_fraction).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut cumulative = Vec::with_capacity(mesh.face_count());
    let mut acc = 0.0;
    for f in 0..mesh.face_count() {
        acc += mesh.face_area(f);
        cumulative.push(acc);
    }
    let noise = Normal::new(0.0, near_sigma).map_err(|_| FieldError::BadSampling { n, near_fraction })?;
    let mut points = Vec::with_capacity(n);
    for _ in 0..near_count {
        let r = rng.gen::<f64>() * acc;
        let f = cumulative.partition_point(|&c| c <= r).min(mesh.face_count() - 1);
        let [a, b, c] = mesh.face_corners(f);
        let (u, v): (f64, f64) = (rng.gen(), rng.gen());
        let su = u.sqrt();
        let p = a.coords * (1.0 - su) + b.coords * (su * (1.0 - v)) + c.coords * (su * v);
        let offset = Vector::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
        points.push(Point::from(p + offset));
    }
    let bbox = mesh.bbox().expect("watertight mesh has vertices");
    for _ in near_count..n {
        let t = Vector::new(rng.gen(), rng.gen(), rng.gen());
        points.push(bbox.min + bbox.extent().component_mul(&t));
    }
    let occupancy: Vec<f64> = points.par_iter().map(|p| field.eval(p)).collect();
    let labels = occupancy.iter().map(|&o| (o >= ALPHA) as u8).collect();
    Ok(SampleSet { points, occupancy, labels, near_count })
}
