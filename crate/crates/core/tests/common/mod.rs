//! A scripted modeling session shared by the session and acceptance tests.
#![allow(dead_code)]

use sketchmesh::camera::OrthoView;
use sketchmesh::geom::{Point, Vector};
use sketchmesh::implicit::{AnalyticSpec, Shape};
use sketchmesh::mesh::{MeshQuery, TriMesh};
use sketchmesh::session::{apply_delta, Command, EngineConfig, FieldRef, FieldSlot, Session, SessionLog};

pub fn circle(n: usize, r: f64) -> Vec<[f64; 2]> {
    (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            [r * t.cos(), r * t.sin()]
        })
        .collect()
}

/// Closest surface points to `points`.
pub fn on_surface(mesh: &TriMesh, points: impl IntoIterator<Item = Point>) -> Vec<Point> {
    let q = MeshQuery::new(mesh);
    points.into_iter().map(|p| q.closest_point(&p).unwrap().point).collect()
}

fn head() -> Shape {
    Shape::Ellipsoid { center: Point::origin(), radii: Vector::new(0.5, 0.5, 0.28) }
}

fn eye_field() -> FieldRef {
    FieldRef::Analytic(AnalyticSpec {
        shape: Shape::Subtract {
            base: Box::new(head()),
            cut: Box::new(Shape::Sphere { center: Point::new(0.18, 0.1, 0.3), radius: 0.08 }),
            blend: 0.02,
        },
        falloff: None,
    })
}

fn arc(mesh: &TriMesh, z: f64, y: f64) -> Vec<Point> {
    on_surface(mesh, (0..12).map(|k| Point::new(-0.25 + 0.5 * k as f64 / 11.0, y, z)))
}

fn eye_loop(mesh: &TriMesh) -> Vec<Point> {
    on_surface(
        mesh,
        (0..=16).map(|k| {
            let t = std::f64::consts::TAU * k as f64 / 16.0;
            Point::new(0.18 + 0.07 * t.cos(), 0.1 + 0.07 * t.sin(), 0.4)
        }),
    )
}

fn ear(mesh: &TriMesh) -> Command {
    let top = mesh.positions().iter().map(|p| p.y).fold(f64::MIN, f64::max);
    let r = 0.08;
    let region_stroke = on_surface(
        mesh,
        (0..=24).map(|k| {
            let t = std::f64::consts::TAU * k as f64 / 24.0;
            Point::new(r * t.cos(), top, r * t.sin())
        }),
    );
    let profile_stroke = vec![Point::new(-r, top, 0.0), Point::new(0.0, top + 0.12, 0.0), Point::new(r, top, 0.0)];
    Command::Extrude { region_stroke, profile_stroke, view: OrthoView::front(Point::origin(), 1.0) }
}

/// Drives a session through 30 commands covering every command kind,
/// checking on the way that each delta rebuilds the next mesh bitwise.
pub fn scripted_session() -> Session {
    let mut s = Session::new(EngineConfig::default());
    let step = |s: &mut Session, c: Command| {
        let before = s.mesh().clone();
        let delta = s.submit(c.clone()).unwrap_or_else(|e| panic!("{} failed: {e}", c.name()));
        assert!(apply_delta(&before, &delta).unwrap().bitwise_eq(s.mesh()), "delta of {}", c.name());
    };
    step(
        &mut s,
        Command::SetField {
            slot: FieldSlot::Coarse,
            field: FieldRef::Analytic(AnalyticSpec { shape: head(), falloff: None }),
        },
    );
    step(&mut s, Command::SetSymmetry { enabled: true });
    step(&mut s, Command::DrawSilhouette { points: circle(40, 0.5) });
    step(&mut s, Command::Refine);
    let c = Command::AddCurve { stroke: arc(s.mesh(), 0.4, 0.0) };
    step(&mut s, c);
    let lifted = |s: &Session, h: u32, d: Vector| -> Vec<Point> {
        let e = &s.state().handles[&h];
        e.curve.vertex_ids[..e.primary_len].iter().map(|&v| s.mesh().positions()[v] + d).collect()
    };
    let t = lifted(&s, 0, Vector::new(0.0, 0.0, 0.03));
    step(&mut s, Command::DeformHandle { handle: 0, targets: t });
    let t = lifted(&s, 0, Vector::new(0.0, 0.02, 0.02));
    step(&mut s, Command::DeformHandle { handle: 0, targets: t });
    let c = Command::Smooth { stroke: Some(arc(s.mesh(), 0.4, -0.2)) };
    step(&mut s, c);
    let c = ear(s.mesh());
    step(&mut s, c);
    step(&mut s, Command::Undo);
    let c = ear(s.mesh());
    step(&mut s, c);
    let c = Command::AddCurve { stroke: arc(s.mesh(), 0.4, 0.25) };
    step(&mut s, c);
    let t = lifted(&s, 1, Vector::new(0.0, 0.03, 0.0));
    step(&mut s, Command::DeformHandle { handle: 1, targets: t });
    step(&mut s, Command::SetField { slot: FieldSlot::Detail, field: eye_field() });
    step(&mut s, Command::EnterStage { stage: 2, keep_detail_curves: false });
    let c = Command::Carve { stroke: eye_loop(s.mesh()), field: None };
    step(&mut s, c);
    step(&mut s, Command::CarveCommit);
    step(&mut s, Command::Smooth { stroke: None });
    step(&mut s, Command::EnterStage { stage: 1, keep_detail_curves: true });
    let t = lifted(&s, 0, Vector::new(0.0, 0.0, -0.02));
    step(&mut s, Command::DeformHandle { handle: 0, targets: t });
    step(&mut s, Command::EnterStage { stage: 2, keep_detail_curves: true });
    let c =
        Command::Carve { stroke: arc(s.mesh(), 0.4, -0.15), field: Some(FieldRef::Mesh { falloff_fraction: 0.02 }) };
    step(&mut s, c);
    step(&mut s, Command::CarveCommit);
    step(&mut s, Command::SetSymmetry { enabled: false });
    let c = Command::Smooth { stroke: Some(arc(s.mesh(), 0.4, 0.1)) };
    step(&mut s, c);
    step(&mut s, Command::Undo);
    step(&mut s, Command::Undo);
    step(&mut s, Command::EnterStage { stage: 1, keep_detail_curves: false });
    step(&mut s, Command::Refine);
    let c = Command::Smooth { stroke: Some(arc(s.mesh(), 0.4, 0.0)) };
    step(&mut s, c);
    assert_eq!(s.log().commands.len(), 30);
    s
}

pub fn scripted_log() -> SessionLog {
    scripted_session().log().clone()
}
