use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sketchmesh::deform::*;
use sketchmesh::geom::{Point, Vector};
use sketchmesh::mesh::{grid, icosphere, ring_distances};
use sketchmesh::stroke::Stroke;

#[test]
fn bind_follows_stroke_order() {
    let g = grid(4, 4, 4.0, 4.0);
    let ids = [6usize, 7, 12, 17, 18];
    let stroke = Stroke::on_surface(ids.iter().map(|&i| g.positions()[i]).collect());
    let h = bind_handle(&g, &stroke, 0.01).unwrap();
    assert_eq!(h.vertex_ids, ids);
    assert!(h.anchor_ids.is_empty());
    let h = bind_handle_with(&g, &stroke, 0.01, 1).unwrap();
    let rings = ring_distances(&g, ids);
    assert_eq!(h.anchor_ids, (0..g.vertex_count()).filter(|&v| rings[v] > 1).collect::<Vec<_>>());
}

#[test]
fn equidistant_point_takes_lower_index() {
    let g = grid(4, 4, 4.0, 4.0);
    let (a, b) = (6usize, 7usize);
    let mid = Point::from((g.positions()[a].coords + g.positions()[b].coords) / 2.0);
    assert_eq!((mid - g.positions()[a]).norm(), (mid - g.positions()[b]).norm());
    let h = bind_handle(&g, &Stroke::on_surface(vec![mid]), 0.01).unwrap();
    assert_eq!(h.vertex_ids, vec![a]);
}

#[test]
fn zigzag_collapses_and_revisit_fails() {
    let g = grid(4, 4, 4.0, 4.0);
    let p = |i: usize| g.positions()[i];
    let near = |i: usize| p(i) + Vector::new(0.1, 0.05, 0.0);
    let s = Stroke::on_surface(vec![p(6), near(6), p(7), p(7), p(8)]);
    assert_eq!(bind_handle(&g, &s, 0.01).unwrap().vertex_ids, vec![6, 7, 8]);
    let s = Stroke::on_surface(vec![p(6), p(7), p(6)]);
    assert_eq!(bind_handle(&g, &s, 0.01).unwrap_err(), DeformError::RevisitedVertex { vertex: 6, index: 2 });
}

#[test]
fn off_surface_reports_index() {
    let g = grid(4, 4, 4.0, 4.0);
    let s = Stroke::on_surface(vec![Point::origin(), Point::new(0.0, 0.0, 0.3)]);
    match bind_handle(&g, &s, 0.01) {
        Err(DeformError::OffSurface { index: 1, distance, .. }) => assert!((distance - 0.3).abs() < 1e-12),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn free_translation_without_anchors() {
    let m = icosphere(3, 1.0);
    let t = Vector::new(0.2, -0.4, 0.7);
    let h = HandleCurve { vertex_ids: vec![0, 5, 40, 100], targets: None, anchor_ids: vec![] };
    let targets = h.rest_targets(&m).iter().map(|p| p + t).collect();
    let h = h.with_targets(targets).unwrap();
    let out = deform_fresh(&m, &h, DeformParams::default()).unwrap();
    for (a, b) in out.positions().iter().zip(m.positions()) {
        assert!((a - (b + t)).norm() <= 1e-8);
    }
}

#[test]
fn pull_decays_with_ring_distance() {
    let m = icosphere(4, 1.0);
    let v = 0;
    let h = HandleCurve::new(&m, vec![v], ANCHOR_RINGS).unwrap();
    let p = m.positions()[v];
    let h = h.with_targets(vec![p + p.coords.normalize() * 0.1]).unwrap();
    let sys = prefactorize(&m, &h, DeformParams::default()).unwrap();
    let out = deform(&m, &h, &sys).unwrap();
    let rings = ring_distances(&m, [v]);
    let mut per_ring = vec![0.0f64; 6];
    for i in 0..m.vertex_count() {
        if rings[i] <= 5 {
            per_ring[rings[i]] = per_ring[rings[i]].max((out.positions()[i] - m.positions()[i]).norm());
        }
    }
    for w in per_ring.windows(2) {
        assert!(w[1] <= w[0], "{per_ring:?}");
    }
    for &a in &h.anchor_ids {
        assert_eq!(out.positions()[a], m.positions()[a]);
    }
}

#[test]
fn background_and_fresh_agree() {
    let m = icosphere(4, 1.0);
    let h = HandleCurve::new(&m, vec![3, 50, 51], 6).unwrap();
    let targets = h.rest_targets(&m).iter().map(|p| p + Vector::new(0.0, 0.05, 0.1)).collect();
    let h = h.with_targets(targets).unwrap();
    let pending = prefactorize_in_background(&m, &h, DeformParams::default()).unwrap();
    let early = deform(&m, &h, &pending).unwrap();
    pending.wait().unwrap();
    assert!(pending.is_ready());
    let late = deform(&m, &h, &pending).unwrap();
    let fresh = deform_fresh(&m, &h, DeformParams::default()).unwrap();
    for ((a, b), c) in late.positions().iter().zip(fresh.positions()).zip(early.positions()) {
        assert!((a - b).norm() <= 1e-12 && (a - c).norm() <= 1e-12);
    }
}

#[test]
fn changed_mesh_invalidates_system() {
    let m = icosphere(2, 1.0);
    let h = HandleCurve::new(&m, vec![1], 4).unwrap();
    let sys = prefactorize(&m, &h, DeformParams::default()).unwrap();
    let sub = sketchmesh::mesh::midpoint_subdivide(
        &m,
        &sketchmesh::mesh::VertexRegion::new(&m, m.faces()[0].iter().copied()).unwrap(),
    )
    .unwrap()
    .0;
    let h2 =
        HandleCurve { vertex_ids: vec![1], targets: Some(vec![Point::origin()]), anchor_ids: h.anchor_ids.clone() };
    assert!(sub.vertex_count() > m.vertex_count());
    assert_eq!(deform(&sub, &h2, &sys).unwrap_err(), DeformError::StaleSystem);
    assert_eq!(deform(&m, &HandleCurve { targets: None, ..h.clone() }, &sys).unwrap_err(), DeformError::NoTargets);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn deformation_is_linear_in_targets(seed in 0u64..10_000) {
        let m = icosphere(2, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = HandleCurve::new(&m, vec![0, 12, 20], 3).unwrap();
        let rest = h.rest_targets(&m);
        let mut jitter = || -> Vec<Point> {
            rest.iter().map(|p| p + Vector::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2))).collect()
        };
        let (ta, tb) = (jitter(), jitter());
        let tab: Vec<Point> = (0..rest.len()).map(|i| Point::from(ta[i].coords + tb[i].coords - rest[i].coords)).collect();
        let sys = prefactorize(&m, &h, DeformParams::default()).unwrap();
        let run = |t: Vec<Point>| deform(&m, &h.clone().with_targets(t).unwrap(), &sys).unwrap();
        let (a, b, ab) = (run(ta), run(tb), run(tab));
        for i in 0..m.vertex_count() {
            let lhs = a.positions()[i].coords + b.positions()[i].coords - m.positions()[i].coords;
            prop_assert!((lhs - ab.positions()[i].coords).norm() <= 1e-8);
        }
    }

    #[test]
    fn translation_equivariant(tx in -3.0..3.0f64, ty in -3.0..3.0f64, tz in -3.0..3.0f64) {
        let m = icosphere(2, 1.0);
        let t = Vector::new(tx, ty, tz);
        let h = HandleCurve::new(&m, vec![0, 12], 2).unwrap();
        let targets: Vec<Point> = h.rest_targets(&m).iter().map(|p| p + Vector::new(0.0, 0.0, 0.1)).collect();
        let moved = m.with_positions(m.positions().iter().map(|p| p + t).collect()).unwrap();
        let a = deform_fresh(&m, &h.clone().with_targets(targets.clone()).unwrap(), DeformParams::default()).unwrap();
        let b = deform_fresh(&moved, &h.clone().with_targets(targets.iter().map(|p| p + t).collect()).unwrap(), DeformParams::default()).unwrap();
        for (p, q) in a.positions().iter().zip(b.positions()) {
            prop_assert!((q - (p + t)).norm() <= 1e-8);
        }
    }
}
