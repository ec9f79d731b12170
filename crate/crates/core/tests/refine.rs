use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sketchmesh::camera::OrthoView;
use sketchmesh::geom::{Point, Vector};
use sketchmesh::implicit::{mesh_to_field, AnalyticField, OccupancyField, Shape};
use sketchmesh::mesh::{grid, icosphere, laplacian, LaplacianKind, TriMesh};
use sketchmesh::refine::*;
use sketchmesh::stroke::Stroke;

const W: f64 = 0.05;

fn unit_sphere() -> AnalyticField {
    AnalyticField::sphere(Point::origin(), 1.0, W).unwrap()
}

/// Scalar walk along a ray through the origin: `r ← r + d·sign(f(r) − α)`,
/// `d` halved when the sign changes, `f(r) = clamp(0.5 − (r − 1)/w)`.
fn radial_oracle(r0: f64, sched: &ProjectionSchedule) -> Vec<f64> {
    let occ = |r: f64| (0.5 - (r - 1.0) / W).clamp(0.0, 1.0);
    let mut r = r0;
    let mut d = sched.step0;
    let mut prev = 0.0f64;
    let mut out = vec![r];
    for _ in 0..sched.iters {
        let s = (occ(r) - sched.alpha).signum() * ((occ(r) - sched.alpha) != 0.0) as i32 as f64;
        if s != 0.0 && prev != 0.0 && s != prev {
            d *= sched.ratio;
        }
        prev = s;
        r += d * s;
        out.push(r);
    }
    out
}

/// Worst-case final residual over starts within a few ulps of `1 + gap`.
fn oracle_bound(gap: f64, sched: &ProjectionSchedule) -> f64 {
    let start = 1.0 + gap;
    (-8i32..=8)
        .map(|k| start + k as f64 * f64::EPSILON * start)
        .map(|r| (radial_oracle(r, sched).last().unwrap() - 1.0).abs())
        .fold(0.0, f64::max)
}

#[test]
fn trajectory_matches_scalar_oracle() {
    let sched = ProjectionSchedule::default();
    let field = unit_sphere();
    let p = project_points(&[Point::new(0.8, 0.0, 0.0)], &[Vector::x()], None, &field, &sched, true).unwrap();
    let oracle = radial_oracle(0.8, &sched);
    for (q, r) in p.trajectories[0].iter().zip(&oracle) {
        assert!((q.x - r).abs() <= 1e-12 && q.y == 0.0 && q.z == 0.0);
    }
    let mesh = icosphere(3, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let starts: Vec<Point> = mesh.positions().iter().map(|u| Point::from(u.coords * rng.gen_range(0.3..1.7))).collect();
    let normals: Vec<Vector> = starts.iter().map(|p| p.coords.normalize()).collect();
    let p = project_points(&starts, &normals, None, &field, &sched, true).unwrap();
    for (path, s) in p.trajectories.iter().zip(&starts) {
        let oracle = radial_oracle(s.coords.norm(), &sched);
        assert_eq!(path.len(), 6);
        for (q, r) in path.iter().zip(&oracle) {
            assert!((q.coords.norm() - r).abs() <= 1e-12);
        }
    }
}

#[test]
fn sphere_projection_within_oracle_bound() {
    let sched = ProjectionSchedule::default();
    let bound = oracle_bound(0.3, &sched);
    assert!((bound - 0.05).abs() < 1e-9, "oracle bound {bound}");
    let m = icosphere(4, 1.3);
    let p = project_to_isosurface(&m, &unit_sphere(), &sched, None).unwrap();
    let worst = p.targets.iter().map(|q| (q.coords.norm() - 1.0).abs()).fold(0.0, f64::max);
    assert!(worst <= bound + 1e-9, "{worst}");
}

#[test]
fn refine_sphere_and_ellipsoid() {
    let sched = ProjectionSchedule::default();
    let bound = oracle_bound(0.3, &sched);
    let field = unit_sphere();
    let one = refine_coarse(&icosphere(4, 1.3), &field, &CoarseParams::default()).unwrap();
    let worst = one.positions().iter().map(|q| (q.coords.norm() - 1.0).abs()).fold(0.0, f64::max);
    assert!(worst <= bound + 1e-3, "{worst}");
    let two =
        refine_coarse(&icosphere(4, 1.3), &field, &CoarseParams { outer_rounds: 2, ..Default::default() }).unwrap();
    let worst = two.positions().iter().map(|q| (q.coords.norm() - 1.0).abs()).fold(0.0, f64::max);
    assert!(worst <= bound, "{worst}");

    let s = icosphere(4, 1.0);
    let ell = s.with_positions(s.positions().iter().map(|p| Point::new(0.9 * p.x, p.y, 1.1 * p.z)).collect()).unwrap();
    let out = refine_coarse(&ell, &field, &CoarseParams::default()).unwrap();
    let worst = out.positions().iter().map(|q| (q.coords.norm() - 1.0).abs()).fold(0.0, f64::max);
    assert!(worst <= 0.05, "{worst}");
    assert_eq!(out, refine_coarse(&ell, &field, &CoarseParams::default()).unwrap());
}

#[test]
fn self_field_is_near_fixed_point() {
    let sched = ProjectionSchedule::default();
    let m = icosphere(3, 1.0);
    let field = mesh_to_field(&m, 0.02).unwrap();
    let out = refine_coarse(&m, &field, &CoarseParams::default()).unwrap();
    let moved = out.positions().iter().zip(m.positions()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(moved <= sched.step0 * sched.ratio.powi(4), "{moved}");
}

#[test]
fn fit_translation_equivariant() {
    let m = icosphere(3, 1.0);
    let t = Vector::new(0.3, -1.7, 2.5);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let targets: Vec<Point> =
        m.positions().iter().map(|p| p + Vector::new(rng.gen(), rng.gen(), rng.gen()) * 0.1).collect();
    let shifted: Vec<Point> = targets.iter().map(|p| p + t).collect();
    let moved = m.with_positions(m.positions().iter().map(|p| p + t).collect()).unwrap();
    for lambda in [0.0, 0.2, 1.0, 10.0] {
        let a = fit_with_smoothness(&m, &targets, &FitParams::new(lambda)).unwrap();
        let b = fit_with_smoothness(&moved, &shifted, &FitParams::new(lambda)).unwrap();
        for (p, q) in a.positions().iter().zip(b.positions()) {
            assert!((q - (p + t)).norm() <= 1e-9);
        }
    }
    let region = sketchmesh::mesh::VertexRegion::new(&m, 0..40).unwrap();
    let a = fit_with_smoothness(&m, &targets, &FitParams::in_region(0.2, region.clone())).unwrap();
    let b = fit_with_smoothness(&moved, &shifted, &FitParams::in_region(0.2, region)).unwrap();
    for (p, q) in a.positions().iter().zip(b.positions()) {
        assert!((q - (p + t)).norm() <= 1e-9);
    }
}

#[test]
fn heavy_smoothing_lowers_laplacian_energy() {
    let m = icosphere(3, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let noisy: Vec<Point> =
        m.positions().iter().map(|p| p + Vector::new(rng.gen(), rng.gen(), rng.gen()) * 0.05).collect();
    let l = laplacian(&m, LaplacianKind::Uniform).unwrap();
    let energy = |mesh: &TriMesh| -> f64 {
        (0..3)
            .map(|c| {
                let col: Vec<f64> = mesh.positions().iter().map(|p| p[c]).collect();
                l.mul_vec(&col).iter().map(|v| v * v).sum::<f64>()
            })
            .sum()
    };
    let rough = fit_with_smoothness(&m, &noisy, &FitParams::new(0.0)).unwrap();
    let smooth = fit_with_smoothness(&m, &noisy, &FitParams::new(1e3)).unwrap();
    assert!(energy(&smooth) <= energy(&rough));
}

fn groove_field(stroke: &[Point]) -> AnalyticField {
    let shape = Shape::Subtract {
        base: Box::new(Shape::Sphere { center: Point::origin(), radius: 1.0 }),
        cut: Box::new(Shape::Capsule { a: stroke[0], b: *stroke.last().unwrap(), radius: 0.08 }),
        blend: 0.02,
    };
    AnalyticField::new(shape, 0.05).unwrap()
}

fn cap_stroke() -> Vec<Point> {
    (0..=8).map(|k| -0.4 + 0.1 * k as f64).map(|t: f64| Point::new(t.sin(), 0.0, t.cos())).collect()
}

#[test]
fn groove_moves_region_inward_only() {
    let m = icosphere(4, 1.0);
    let pts = cap_stroke();
    let out =
        carve_details(&m, &[Stroke::on_surface(pts.clone())], &groove_field(&pts), &CarveParams::default()).unwrap();
    let n0 = m.vertex_count();
    let mut radial = 0.0;
    for &v in out.region.members() {
        let before = if v < n0 { m.positions()[v] } else { Point::from(out.mesh.positions()[v].coords.normalize()) };
        radial += out.mesh.positions()[v].coords.norm() - before.coords.norm();
    }
    assert!(radial / (out.region.len() as f64) < 0.0);
    for v in 0..n0 {
        if !out.region.contains(v) && !out.band.contains(v) {
            assert_eq!(out.mesh.positions()[v], m.positions()[v]);
        }
    }
}

#[test]
fn carve_self_field_and_empty() {
    let sched = ProjectionSchedule::default();
    let m = icosphere(3, 1.0);
    let field = mesh_to_field(&m, 0.02).unwrap();
    let out = carve_details(&m, &[Stroke::on_surface(cap_stroke())], &field, &CarveParams::default()).unwrap();
    let sub = &out.subdivided;
    assert!(sub.vertex_count() > m.vertex_count());
    assert_eq!(&sub.positions()[..m.vertex_count()], m.positions());
    for &v in out.region.members() {
        assert!((out.mesh.positions()[v] - sub.positions()[v]).norm() <= sched.step0 * sched.ratio.powi(4));
    }
    for v in 0..sub.vertex_count() {
        if !out.region.contains(v) && !out.band.contains(v) {
            assert_eq!(out.mesh.positions()[v], sub.positions()[v]);
        }
    }
    let same = carve_details(&m, &[], &field, &CarveParams::default()).unwrap();
    assert_eq!(same.mesh, m);
}

#[test]
fn off_surface_stroke_rejected() {
    let m = icosphere(3, 1.0);
    let s = Stroke::on_surface(vec![Point::new(0.0, 0.0, 1.0), Point::new(0.0, 0.0, 1.5)]);
    match carve_details(&m, &[s], &unit_sphere(), &CarveParams::default()) {
        Err(RefineError::OffSurface { stroke: 0, point: 1, distance, .. }) => assert!((distance - 0.5).abs() < 0.01),
        other => panic!("unexpected {other:?}"),
    }
}

fn square_loop(half: f64) -> Stroke {
    let mut pts = Vec::new();
    for k in 0..=40 {
        let t = k as f64 / 40.0 * 4.0;
        let (x, y) = match t as usize {
            0 => (-half + 2.0 * half * t, -half),
            1 => (half, -half + 2.0 * half * (t - 1.0)),
            2 => (half - 2.0 * half * (t - 2.0), half),
            _ => (-half, half - 2.0 * half * (t - 3.0)),
        };
        pts.push(Point::new(x, y, 0.0));
    }
    Stroke::on_surface(pts)
}

fn side_view() -> OrthoView {
    OrthoView::new(Point::origin(), Vector::y(), Vector::z(), 1.0, 1.0).unwrap()
}

fn tent(h: f64) -> Stroke {
    Stroke::on_surface(vec![Point::new(-0.3, 0.0, 0.0), Point::new(0.0, 0.0, h), Point::new(0.3, 0.0, 0.0)])
}

#[test]
fn extrude_tent_profile() {
    let patch = grid(40, 40, 2.0, 2.0);
    let params = ExtrudeParams::default();
    let h = 0.2;
    let out = extrude(&patch, &square_loop(0.3), &tent(h), &side_view(), &params).unwrap();
    let n0 = patch.vertex_count();
    let lift = |m: &TriMesh, v: usize| m.positions()[v].z;
    let top = (0..out.vertex_count()).map(|v| lift(&out, v)).fold(0.0, f64::max);
    assert!((top - h).abs() <= 0.05 * h, "{top}");
    for v in 0..n0 {
        let p = patch.positions()[v];
        if p.x.abs() > 0.3 || p.y.abs() > 0.3 {
            assert_eq!(out.positions()[v], p);
        }
    }
    let doubled = extrude(&patch, &square_loop(0.3), &tent(2.0 * h), &side_view(), &params).unwrap();
    assert_eq!(doubled.vertex_count(), out.vertex_count());
    for v in 0..out.vertex_count() {
        assert!((lift(&doubled, v) - 2.0 * lift(&out, v)).abs() <= 1e-12);
    }
}

#[test]
fn extrude_flat_profile_and_errors() {
    let patch = grid(20, 20, 2.0, 2.0);
    let params = ExtrudeParams::default();
    let flat = Stroke::on_surface(vec![Point::new(-0.3, 0.0, 0.0), Point::new(0.3, 0.0, 0.0)]);
    assert_eq!(extrude(&patch, &square_loop(0.3), &flat, &side_view(), &params).unwrap(), patch);

    let open = Stroke::on_surface(square_loop(0.3).points[..30].to_vec());
    assert!(matches!(
        extrude(&patch, &open, &tent(0.2), &side_view(), &params),
        Err(RefineError::OpenRegionStroke { .. })
    ));
    assert!(matches!(
        extrude(&patch, &square_loop(0.3), &tent(-0.2), &side_view(), &params),
        Err(RefineError::ProfileNotRising { .. })
    ));
}

fn arb_sched() -> impl Strategy<Value = ProjectionSchedule> {
    (1usize..8, 0.01..0.3f64, 0.5..0.9f64).prop_map(|(iters, step0, ratio)| ProjectionSchedule {
        iters,
        step0,
        ratio,
        ..Default::default()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Once the walk has bracketed the surface, the residual never exceeds
    /// the step just taken; the total displacement obeys the step bounds.
    #[test]
    fn walk_bracketing_and_step_bounds(r0 in 0.2..1.8f64, sched in arb_sched()) {
        let field = unit_sphere();
        let p = project_points(&[Point::new(0.0, r0, 0.0)], &[Vector::y()], None, &field, &sched, true).unwrap();
        let path: Vec<f64> = p.trajectories[0].iter().map(|q| q.y).collect();
        let oracle = radial_oracle(r0, &sched);
        let mut flipped = false;
        let mut after_flip = 0.0;
        for k in 1..path.len() {
            prop_assert!((path[k] - oracle[k]).abs() <= 1e-12);
            let step = (path[k] - path[k - 1]).abs();
            if flipped {
                after_flip += step;
                prop_assert!((path[k] - 1.0).abs() <= step + 1e-12 || step == 0.0);
            }
            if !flipped && k >= 1 && (path[k] - 1.0).signum() != (path[0] - 1.0).signum() {
                flipped = true;
            }
        }
        prop_assert!((path.last().unwrap() - r0).abs() <= sched.step0 * sched.iters as f64 + 1e-12);
        prop_assert!(after_flip <= sched.step0 / (1.0 - sched.ratio) + 1e-12);
    }

    #[test]
    fn fit_is_energy_minimal(seed in 0u64..1000, lambda in 0.0..5.0f64) {
        let m = icosphere(1, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let targets: Vec<Point> =
            m.positions().iter().map(|p| p + Vector::new(rng.gen(), rng.gen(), rng.gen()) * 0.1).collect();
        let params = FitParams::new(lambda);
        let out = fit_with_smoothness(&m, &targets, &params).unwrap();
        let e0 = fit_energy(&m, out.positions(), &targets, &params).unwrap();
        for _ in 0..8 {
            let moved: Vec<Point> = out
                .positions()
                .iter()
                .map(|p| p + Vector::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 1e-4)
                .collect();
            prop_assert!(fit_energy(&m, &moved, &targets, &params).unwrap() >= e0 - 1e-12);
        }
    }

    #[test]
    fn zero_lambda_is_exact(seed in 0u64..1000) {
        let m = icosphere(2, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let targets: Vec<Point> = m.positions().iter().map(|p| p + Vector::new(rng.gen(), rng.gen(), rng.gen())).collect();
        let out = fit_with_smoothness(&m, &targets, &FitParams::new(0.0)).unwrap();
        for (a, b) in out.positions().iter().zip(&targets) {
            prop_assert!((a - b).norm() <= 1e-10);
        }
    }
}

#[test]
fn field_bbox_is_evaluated_totally() {
    let f = unit_sphere();
    let b = f.bbox();
    for p in [b.min, b.max, b.center()] {
        let v = f.eval(&p);
        assert!((0.0..=1.0).contains(&v));
    }
}
