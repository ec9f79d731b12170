use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sketchmesh::geom::{Aabb, Point, Vector};
use sketchmesh::implicit::*;
use sketchmesh::mesh::{cube, icosphere, TriMesh};
use sketchmesh::stroke::Stroke;

/// Generalized winding number by summed solid angles; independent of the
/// ray-parity test under check.
fn winding(mesh: &TriMesh, p: &Point) -> f64 {
    let mut total = 0.0;
    for f in mesh.faces() {
        let a = mesh.positions()[f[0]] - p;
        let b = mesh.positions()[f[1]] - p;
        let c = mesh.positions()[f[2]] - p;
        let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
        let num = a.dot(&b.cross(&c));
        let den = la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
        total += 2.0 * num.atan2(den);
    }
    total / (4.0 * std::f64::consts::PI)
}

fn lumpy_sphere() -> TriMesh {
    let s = icosphere(3, 1.0);
    let p = s
        .positions()
        .iter()
        .map(|p| {
            let r = 1.0 + 0.25 * (3.0 * p.x).sin() * (2.0 * p.y).cos() + 0.15 * (4.0 * p.z).sin();
            Point::from(p.coords * r)
        })
        .collect();
    s.with_positions(p).unwrap()
}

#[test]
fn sphere_field_examples() {
    let f = AnalyticField::sphere(Point::origin(), 1.0, 0.05).unwrap();
    assert_eq!(f.eval(&Point::origin()), 1.0);
    assert_eq!(f.eval(&Point::new(3.0, 0.0, 0.0)), 0.0);
    assert_eq!(f.eval(&Point::new(0.0, 1.0, 0.0)), 0.5);
    assert_eq!(f.eval(&Point::new(0.0, 0.0, -1.0)), 0.5);
}

#[test]
fn parity_matches_winding_oracle() {
    let mesh = lumpy_sphere();
    let field = mesh_to_field(&mesh, 0.02).unwrap();
    let bb = mesh.bbox().unwrap().expanded(0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut inside = 0;
    for _ in 0..10_000 {
        let t = Vector::new(rng.gen(), rng.gen(), rng.gen());
        let p = bb.min + bb.extent().component_mul(&t);
        let w = winding(&mesh, &p);
        assert!((w - w.round()).abs() < 1e-6, "winding {w} not integral");
        let oracle = w.round() != 0.0;
        assert_eq!(field.is_inside(&p), oracle, "at {p:?}");
        inside += oracle as usize;
    }
    assert!(inside > 1000 && inside < 9000);
}

#[test]
fn cube_field_examples() {
    let field = mesh_to_field(&cube(1.0), 0.05).unwrap();
    assert_eq!(field.eval(&Point::origin()), 1.0);
    assert_eq!(field.eval(&Point::new(2.0, 0.3, 0.1)), 0.0);
    assert_eq!(field.eval(&Point::new(0.5, 0.1, -0.2)), 0.5);
}

#[test]
fn sampling_mixture_counts() {
    let s = icosphere(3, 1.0);
    let a = sample_points(&s, 60_000, 0.9, 0.02, 3).unwrap();
    assert_eq!((a.near_count, a.uniform_count()), (54_000, 6_000));
    let b = sample_points(&s, 8_000, 7.0 / 8.0, 0.02, 3).unwrap();
    assert_eq!((b.near_count, b.uniform_count()), (7_000, 1_000));
    assert_eq!(b.labels.len(), 8_000);
}

#[test]
fn sample_labels_match_oracle() {
    let mesh = lumpy_sphere();
    let set = sample_points(&mesh, 1_000, 0.9, 0.03, 11).unwrap();
    for (p, &l) in set.points.iter().zip(&set.labels) {
        let w = winding(&mesh, p).round() != 0.0;
        assert_eq!(l == 1, w, "label at {p:?}");
    }
    let bb = mesh.bbox().unwrap();
    assert!(set.points[set.near_count..].iter().all(|p| bb.contains(p)));
}

#[test]
fn sampling_rejects_bad_fraction() {
    let s = icosphere(1, 1.0);
    assert!(sample_points(&s, 10, 1.5, 0.01, 0).is_err());
}

#[test]
fn voxel_defaults() {
    let s = Stroke::on_surface(vec![Point::origin(), Point::new(1.0, 2.0, 0.5), Point::new(-1.0, 0.3, 0.2)]);
    let g = voxelize_strokes(&[s], DEFAULT_RESOLUTION).unwrap();
    assert_eq!(g.resolution(), 128);
    assert_eq!(STROKE_SAMPLES, 3000);
    assert!(g.occupied_count() <= STROKE_SAMPLES);
    assert!(g.occupied_count() > 100);
}

/// An axis-aligned segment between cell centres of cells i0 and i1 covers
/// exactly i1 − i0 + 1 cells.
#[test]
fn axis_segment_cell_count() {
    let bbox = Aabb::new(Point::origin(), Point::new(1.0, 1.0, 1.0));
    let res = 64;
    let h = 1.0 / res as f64;
    for (i0, i1) in [(3usize, 3usize), (3, 10), (0, 63), (20, 41)] {
        let y = (17.5) * h;
        let z = (40.5) * h;
        let a = Point::new((i0 as f64 + 0.5) * h, y, z);
        let b = Point::new((i1 as f64 + 0.5) * h, y, z);
        let s = Stroke::on_surface(vec![a, b]);
        let g = voxelize_strokes_in(&[s], res, &bbox).unwrap();
        assert_eq!(g.occupied_count(), i1 - i0 + 1);
        assert!(g.occupied_cells().iter().all(|c| c[1] == 17 && c[2] == 40));
    }
}

#[test]
fn grid_file_round_trip() {
    let f = AnalyticField::sphere(Point::new(0.1, 0.0, 0.0), 0.8, 0.1).unwrap();
    let g = GridField::bake(&f, [9, 7, 5]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.smgf");
    save_grid(&g, &path).unwrap();
    let back = load_grid(&path).unwrap();
    assert_eq!(back, g);
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"SMGF");
    assert_eq!(bytes.len(), 4 + 4 + 12 + 48 + 4 * 9 * 7 * 5);
}

#[test]
fn spec_json_round_trip() {
    let json = r#"{"shape":{"type":"capsule","a":[0,0,0],"b":[1,0,0],"radius":0.2}}"#;
    let spec: AnalyticSpec = serde_json::from_str(json).unwrap();
    let f = AnalyticField::from_spec(&spec).unwrap();
    assert_eq!(f.eval(&Point::new(0.5, 0.2, 0.0)), 0.5);
}

fn arb_point() -> impl Strategy<Value = Point> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, z)| Point::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn occupancy_in_unit_range(p in arb_point(), r in 0.1..1.5f64, w in 0.01..0.5f64) {
        let f = AnalyticField::sphere(Point::new(0.2, -0.1, 0.0), r, w).unwrap();
        let v = f.eval(&p);
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn smooth_union_dominates(p in arb_point(), blend in 0.0..0.5f64) {
        let a = Shape::Sphere { center: Point::new(-0.4, 0.0, 0.0), radius: 0.6 };
        let b = Shape::Capsule { a: Point::new(0.0, -0.5, 0.2), b: Point::new(0.8, 0.5, 0.0), radius: 0.3 };
        let w = 0.1;
        let u = AnalyticField::new(Shape::Union { children: vec![a.clone(), b.clone()], blend }, w).unwrap();
        let fa = AnalyticField::new(a, w).unwrap();
        let fb = AnalyticField::new(b, w).unwrap();
        prop_assert!(u.eval(&p) >= fa.eval(&p).max(fb.eval(&p)) - 1e-9);
    }

    #[test]
    fn grid_cell_center_is_corner_mean(vals in prop::collection::vec(0.0..1.0f32, 27), cx in 0usize..2, cy in 0usize..2, cz in 0usize..2) {
        let bbox = Aabb::new(Point::new(-1.0, 0.0, 2.0), Point::new(1.0, 3.0, 2.5));
        let g = GridField::new([3, 3, 3], bbox, vals).unwrap();
        let mut mean = 0.0;
        for k in 0..8 {
            mean += g.value(cx + (k & 1), cy + ((k >> 1) & 1), cz + (k >> 2)) as f64;
        }
        mean /= 8.0;
        let a = g.node_position(cx, cy, cz);
        let b = g.node_position(cx + 1, cy + 1, cz + 1);
        let c = Point::from((a.coords + b.coords) / 2.0);
        prop_assert!((g.eval(&c) - mean).abs() <= 1e-12);
        prop_assert_eq!(g.eval(&a), g.value(cx, cy, cz) as f64);
    }

    #[test]
    fn voxelize_translation_covariant(tx in -8i32..8, ty in -8i32..8, tz in -8i32..8) {
        let strokes = vec![
            Stroke::on_surface(vec![Point::new(0.1, 0.2, 0.3), Point::new(0.7, 0.4, 0.9), Point::new(0.2, 0.8, 0.5)]),
            Stroke::on_surface(vec![Point::new(0.5, 0.5, 0.1), Point::new(0.55, 0.6, 0.2)]),
        ];
        let t = Vector::new(tx as f64 * 0.25, ty as f64 * 0.25, tz as f64 * 0.25);
        let moved: Vec<Stroke> = strokes
            .iter()
            .map(|s| Stroke::on_surface(s.points.iter().map(|p| p + t).collect()))
            .collect();
        let bbox = stroke_bbox(&strokes).unwrap();
        let moved_bbox = Aabb::new(bbox.min + t, bbox.max + t);
        let a = voxelize_strokes_in(&strokes, 32, &bbox).unwrap();
        let b = voxelize_strokes_in(&moved, 32, &moved_bbox).unwrap();
        prop_assert_eq!(a.as_bytes(), b.as_bytes());
        prop_assert_eq!(voxelize_strokes(&strokes, 32).unwrap().as_bytes(), voxelize_strokes(&moved, 32).unwrap().as_bytes());
    }

    #[test]
    fn voxel_count_bounded(pts in prop::collection::vec(arb_point(), 1..20)) {
        let g = voxelize_strokes(&[Stroke::on_surface(pts)], 128).unwrap();
        prop_assert!(g.occupied_count() >= 1 && g.occupied_count() <= STROKE_SAMPLES);
    }
}
