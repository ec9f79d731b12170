mod common;

use common::*;
use sketchmesh::mesh::obj::to_obj_string;
use sketchmesh::session::*;

#[test]
fn scripted_session_replays_bitwise() {
    let live = scripted_session();
    let log = live.log().clone();
    let config = EngineConfig::default();
    let a = replay_mesh(&log, &config).unwrap();
    let b = replay_mesh(&log, &config).unwrap();
    assert!(a.bitwise_eq(live.mesh()));
    assert_eq!(to_obj_string(&a), to_obj_string(&b));
    let text = log.to_jsonl();
    let parsed = SessionLog::from_jsonl(&text).unwrap();
    assert_eq!(parsed, log);
    assert_eq!(parsed.to_jsonl(), text);
    assert!(replay_mesh(&parsed, &config).unwrap().bitwise_eq(&a));
    assert!(a.is_watertight());
}

fn started() -> Session {
    let mut s = Session::new(EngineConfig::default());
    s.submit(Command::DrawSilhouette { points: circle(32, 0.5) }).unwrap();
    s
}

#[test]
fn draw_silhouette_is_deterministic() {
    let mut a = Session::new(EngineConfig::default());
    let mut b = Session::new(EngineConfig::default());
    let cmd = Command::DrawSilhouette { points: circle(32, 0.5) };
    let (da, db) = (a.submit(cmd.clone()).unwrap(), b.submit(cmd).unwrap());
    assert_eq!(da, db);
    assert_eq!(da.vertex_count, a.mesh().vertex_count());
    assert_eq!(da.vertices.len(), da.vertex_count);
    assert_eq!(da.faces_added.len(), a.mesh().face_count());
}

#[test]
fn undo_restores_and_redo_matches() {
    let mut s = started();
    let stroke = on_surface(s.mesh(), (0..8).map(|k| sketchmesh::geom::Point::new(-0.2 + 0.05 * k as f64, 0.0, 0.5)));
    let cmd = Command::Smooth { stroke: Some(stroke) };
    let before = s.state().clone();
    s.submit(cmd.clone()).unwrap();
    let after = s.state().clone();
    assert!(!after.mesh.bitwise_eq(&before.mesh));
    let d = s.submit(Command::Undo).unwrap();
    assert!(s.mesh().bitwise_eq(&before.mesh));
    assert_eq!(s.state(), &before);
    assert!(!d.is_empty());
    s.submit(cmd).unwrap();
    assert!(s.mesh().bitwise_eq(&after.mesh));
    assert_eq!(s.state(), &after);
}

#[test]
fn undo_is_bounded_and_never_underflows() {
    let mut s = started();
    let mesh = s.mesh().clone();
    for k in 0..40 {
        s.submit(Command::SetSymmetry { enabled: k % 2 == 0 }).unwrap();
    }
    assert_eq!(s.undo_len(), UNDO_DEPTH);
    for _ in 0..50 {
        s.submit(Command::Undo).unwrap();
    }
    assert_eq!(s.undo_len(), 0);
    // The silhouette fell off the bounded stack, so the mesh survives.
    assert!(s.mesh().bitwise_eq(&mesh));
    let mut fresh = Session::new(EngineConfig::default());
    assert!(fresh.submit(Command::Undo).unwrap().is_empty());
}

#[test]
fn stage_violation_in_log_reports_seq() {
    let mut s = started();
    s.submit(Command::SetSymmetry { enabled: true }).unwrap();
    let mut log = s.log().clone();
    log.commands.push(LoggedCommand { seq: 9, command: Command::CarveCommit });
    let e = replay(&log, &EngineConfig::default()).err().unwrap();
    assert_eq!(e.seq, Some(9));
    assert!(matches!(e.kind, ErrorKind::Stage { command: "carve_commit", stage: 1 }));
    log.commands.pop();
    log.commands.push(LoggedCommand { seq: 2, command: Command::Clear });
    let e = replay(&log, &EngineConfig::default()).err().unwrap();
    assert_eq!(e.kind, ErrorKind::Sequence { last: 2, found: 2 });
}

#[test]
fn replay_refuses_other_config() {
    let log = started().log().clone();
    let mut other = EngineConfig::default();
    other.smooth_rings = 5;
    assert!(matches!(replay(&log, &other).err().unwrap().kind, ErrorKind::Config { .. }));
    assert!(replay_mesh(&SessionLog::new(&EngineConfig::default()), &EngineConfig::default()).unwrap().is_empty());
}

#[test]
fn detail_curves_kept_or_dropped() {
    for keep in [false, true] {
        let mut s = started();
        s.submit(Command::SetField { slot: FieldSlot::Detail, field: FieldRef::Mesh { falloff_fraction: 0.02 } })
            .unwrap();
        s.submit(Command::EnterStage { stage: 2, keep_detail_curves: false }).unwrap();
        let stroke =
            on_surface(s.mesh(), (0..8).map(|k| sketchmesh::geom::Point::new(-0.2 + 0.05 * k as f64, 0.1, 0.5)));
        s.submit(Command::Carve { stroke, field: None }).unwrap();
        s.submit(Command::CarveCommit).unwrap();
        let mesh = s.mesh().clone();
        let d = s.submit(Command::EnterStage { stage: 1, keep_detail_curves: keep }).unwrap();
        assert!(d.is_empty());
        assert!(s.mesh().bitwise_eq(&mesh));
        assert_eq!(s.state().detail_curves.len(), keep as usize);
        if keep {
            let q = sketchmesh::mesh::MeshQuery::new(&mesh);
            for p in &s.state().detail_curves[0] {
                assert!(q.closest_point(p).unwrap().distance < 1e-9);
            }
        }
    }
}

#[test]
fn clear_resets_geometry() {
    let mut s = started();
    let d = s.submit(Command::Clear).unwrap();
    assert_eq!(d.vertex_count, 0);
    assert!(s.mesh().is_empty());
    s.submit(Command::DrawSilhouette { points: circle(32, 0.5) }).unwrap();
}

#[test]
fn unknown_handle_and_missing_field() {
    let mut s = started();
    let e = s.submit(Command::DeformHandle { handle: 3, targets: vec![] }).unwrap_err();
    assert_eq!(e.kind, ErrorKind::UnknownHandle(3));
    let e = s.submit(Command::Refine).unwrap_err();
    assert_eq!(e.kind.code(), "field");
    let e = s
        .submit(Command::SetField {
            slot: FieldSlot::Coarse,
            field: FieldRef::Grid { path: "/nonexistent.smgf".into() },
        })
        .unwrap_err();
    assert_eq!(e.kind.code(), "field");
    assert_eq!(s.log().commands.len(), 1);
}
