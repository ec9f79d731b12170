//! Editing sessions: stage rules, undo snapshots, mesh deltas, logs and
//! deterministic replay.
//!
//! A session applies commands strictly in order. Each successful command
//! pushes the previous state onto a bounded undo stack and reports a
//! [`MeshDelta`]; failed commands leave the state untouched and are not
//! logged.

mod command;
mod delta;
mod log;
pub mod protocol;

pub use command::{Command, FieldRef, FieldSlot, LoggedCommand};
pub use delta::{apply_delta, diff, MeshDelta};
pub use log::{LogHeader, SessionLog, LOG_FORMAT, LOG_VERSION};

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::camera::OrthoView;
use crate::deform::{
    bind_handle, deform, prefactorize_in_background, DeformParams, HandleCurve, HandleSystem, ANCHOR_RINGS,
};
use crate::geom::Point;
use crate::implicit::{load_grid, AnalyticField, MeshField, OccupancyField};
use crate::mesh::{k_ring, MeshQuery, MirrorPlane, TriMesh, VertexRegion};
use crate::raster::DEFAULT_SIZE;
use crate::refine::{
    carve_details, extrude, fit_with_smoothness, refine_coarse, snap_strokes, CarveParams, CoarseParams, ExtrudeParams,
    FitParams, SNAP_FRACTION,
};
use crate::silhouette::{default_lm, generate_initial, SilhouetteCurve};
use crate::stroke::{Stroke, StrokeKind};

/// Undo snapshots kept per session.
pub const UNDO_DEPTH: usize = 32;
/// Strokes whose centroid lies within this fraction of the bbox diagonal
/// from the symmetry plane are not mirrored (they would be applied twice).
pub const MIRROR_SKIP_FRACTION: f64 = 0.05;

/// Every tunable that affects geometry. Logs record its hash and replays
/// refuse a different one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub coarse: CoarseParams,
    pub carve: CarveParams,
    pub extrude: ExtrudeParams,
    pub deform: DeformParams,
    pub anchor_rings: usize,
    /// Stroke snap tolerance relative to the bbox diagonal.
    pub snap_fraction: f64,
    /// Inflation magnitude; `None` derives it from the silhouette.
    pub silhouette_lm: Option<f64>,
    pub smooth_lambda: f64,
    pub smooth_rings: usize,
    pub raster_size: usize,
    pub undo_depth: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            coarse: CoarseParams::default(),
            carve: CarveParams::default(),
            extrude: ExtrudeParams::default(),
            deform: DeformParams::default(),
            anchor_rings: ANCHOR_RINGS,
            snap_fraction: SNAP_FRACTION,
            silhouette_lm: None,
            smooth_lambda: 1.0,
            smooth_rings: 2,
            raster_size: DEFAULT_SIZE,
            undo_depth: UNDO_DEPTH,
        }
    }
}

impl EngineConfig {
    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ErrorKind {
    #[error("{command} is not available in stage {stage}")]
    Stage { command: &'static str, stage: u8 },
    #[error("{command} needs a mesh")]
    EmptyMesh { command: &'static str },
    #[error("{command} needs an empty canvas")]
    NonEmptyMesh { command: &'static str },
    #[error("sequence number {found} does not follow {last}")]
    Sequence { last: u64, found: u64 },
    #[error("no handle {0}")]
    UnknownHandle(u32),
    #[error("no {0:?} field bound")]
    NoField(FieldSlot),
    #[error("invalid stage {0}")]
    BadStage(u8),
    #[error("field: {0}")]
    Field(String),
    #[error("{0}")]
    Engine(String),
    #[error("log was recorded with config {found}, engine has {expected}")]
    Config { expected: String, found: String },
    #[error("log: {0}")]
    Log(String),
    #[error("request: {0}")]
    Protocol(String),
}

impl ErrorKind {
    pub fn code(&self) -> &'static str {
        match self {
            ErrorKind::Stage { .. }
            | ErrorKind::EmptyMesh { .. }
            | ErrorKind::NonEmptyMesh { .. }
            | ErrorKind::BadStage(_) => "stage",
            ErrorKind::Sequence { .. } => "sequence",
            ErrorKind::UnknownHandle(_) => "handle",
            ErrorKind::NoField(_) | ErrorKind::Field(_) => "field",
            ErrorKind::Engine(_) => "engine",
            ErrorKind::Config { .. } => "config",
            ErrorKind::Log(_) => "log",
            ErrorKind::Protocol(_) => "protocol",
        }
    }
}

/// An error with the sequence number of the command that raised it.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct SessionError {
    pub seq: Option<u64>,
    pub kind: ErrorKind,
}

impl SessionError {
    pub fn new(seq: Option<u64>, kind: ErrorKind) -> Self {
        Self { seq, kind }
    }
}

impl fmt::Display for SessionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.seq {
            Some(s) => write!(f, "command {s}: {}", self.kind),
            None => write!(f, "{}", self.kind),
        }
    }
}

fn engine<E: std::error::Error>(e: E) -> ErrorKind {
    ErrorKind::Engine(e.to_string())
}

/// A resolved field together with the reference it came from.
#[derive(Clone)]
pub struct FieldBinding {
    pub reference: FieldRef,
    pub field: Arc<dyn OccupancyField>,
}

impl fmt::Debug for FieldBinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldBinding").field("reference", &self.reference).finish_non_exhaustive()
    }
}

impl PartialEq for FieldBinding {
    fn eq(&self, other: &Self) -> bool {
        self.reference == other.reference
    }
}

fn resolve_field(reference: &FieldRef, mesh: &TriMesh) -> Result<FieldBinding, ErrorKind> {
    let field: Arc<dyn OccupancyField> = match reference {
        FieldRef::Analytic(spec) => {
            Arc::new(AnalyticField::from_spec(spec).map_err(|e| ErrorKind::Field(e.to_string()))?)
        }
        FieldRef::Grid { path } => Arc::new(load_grid(path).map_err(|e| ErrorKind::Field(format!("{path}: {e}")))?),
        FieldRef::Mesh { falloff_fraction } => {
            if mesh.is_empty() {
                return Err(ErrorKind::EmptyMesh { command: "set_field" });
            }
            let w = falloff_fraction * mesh.bbox_diagonal();
            Arc::new(MeshField::new(Arc::new(mesh.clone()), w).map_err(|e| ErrorKind::Field(e.to_string()))?)
        }
    };
    Ok(FieldBinding { reference: reference.clone(), field })
}

/// A bound handle: the stroke it came from, its vertices (primary part
/// first, then mirrored vertices) and the prefactorized system.
#[derive(Debug, Clone)]
pub struct HandleEntry {
    pub stroke: Vec<Point>,
    pub curve: HandleCurve,
    pub primary_len: usize,
    /// For each mirrored vertex, the primary index whose target it mirrors.
    pub mirror_of: Vec<usize>,
    pub symmetric: bool,
    system: HandleSystem,
}

impl PartialEq for HandleEntry {
    fn eq(&self, other: &Self) -> bool {
        self.stroke == other.stroke
            && self.curve == other.curve
            && self.primary_len == other.primary_len
            && self.mirror_of == other.mirror_of
            && self.symmetric == other.symmetric
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    pub stage: u8,
    pub mesh: TriMesh,
    pub handles: BTreeMap<u32, HandleEntry>,
    pub next_handle: u32,
    /// Detail strokes waiting for a carve commit.
    pub pending_carve: Vec<Vec<Point>>,
    /// Committed detail strokes, kept for the sketch image.
    pub detail_curves: Vec<Vec<Point>>,
    pub coarse_field: Option<FieldBinding>,
    pub detail_field: Option<FieldBinding>,
    pub symmetric: bool,
    /// Handle being dragged and its rest mesh, while consecutive
    /// deformations of one handle continue.
    drag: Option<(u32, TriMesh)>,
}

impl Default for SessionState {
    fn default() -> Self {
        Self {
            stage: 1,
            mesh: TriMesh::empty(),
            handles: BTreeMap::new(),
            next_handle: 0,
            pending_carve: Vec::new(),
            detail_curves: Vec::new(),
            coarse_field: None,
            detail_field: None,
            symmetric: false,
            drag: None,
        }
    }
}

impl SessionState {
    /// Detail strokes for the sketch image (committed and pending).
    pub fn sketch_strokes(&self) -> Vec<Stroke> {
        self.detail_curves
            .iter()
            .chain(&self.pending_carve)
            .map(|p| Stroke::new(StrokeKind::OnSurface, p.clone()))
            .collect()
    }
}

pub struct Session {
    config: EngineConfig,
    state: SessionState,
    undo: VecDeque<SessionState>,
    log: SessionLog,
}

impl Session {
    pub fn new(config: EngineConfig) -> Self {
        let log = SessionLog::new(&config);
        Self { config, state: SessionState::default(), undo: VecDeque::new(), log }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.state.mesh
    }

    pub fn log(&self) -> &SessionLog {
        &self.log
    }

    pub fn undo_len(&self) -> usize {
        self.undo.len()
    }

    /// Next sequence number a new command should carry.
    pub fn next_seq(&self) -> u64 {
        self.log.commands.last().map_or(1, |c| c.seq + 1)
    }

    /// Applies `command` with the next sequence number.
    pub fn submit(&mut self, command: Command) -> Result<MeshDelta, SessionError> {
        let seq = self.next_seq();
        self.apply(LoggedCommand { seq, command })
    }

    pub fn apply(&mut self, cmd: LoggedCommand) -> Result<MeshDelta, SessionError> {
        if let Some(last) = self.log.commands.last() {
            if cmd.seq <= last.seq {
                return Err(SessionError::new(Some(cmd.seq), ErrorKind::Sequence { last: last.seq, found: cmd.seq }));
            }
        }
        let delta = if cmd.command == Command::Undo {
            match self.undo.pop_back() {
                Some(prev) => {
                    let delta = diff(&self.state.mesh, &prev.mesh);
                    self.state = prev;
                    delta
                }
                None => MeshDelta { vertex_count: self.state.mesh.vertex_count(), ..MeshDelta::default() },
            }
        } else {
            let mut next = self.state.clone();
            apply_command(&self.config, &mut next, &cmd.command).map_err(|k| SessionError::new(Some(cmd.seq), k))?;
            let delta = diff(&self.state.mesh, &next.mesh);
            let prev = std::mem::replace(&mut self.state, next);
            self.undo.push_back(prev);
            while self.undo.len() > self.config.undo_depth {
                self.undo.pop_front();
            }
            delta
        };
        self.log.commands.push(cmd);
        Ok(delta)
    }
}

/// Folds the log over a fresh session. The log's config hash must match.
pub fn replay(log: &SessionLog, config: &EngineConfig) -> Result<Session, SessionError> {
    let expected = config.hash();
    if log.header.config_hash != expected {
        return Err(SessionError::new(None, ErrorKind::Config { expected, found: log.header.config_hash.clone() }));
    }
    let mut session = Session::new(config.clone());
    for cmd in &log.commands {
        session.apply(cmd.clone())?;
    }
    Ok(session)
}

/// Final mesh of a replayed log.
pub fn replay_mesh(log: &SessionLog, config: &EngineConfig) -> Result<TriMesh, SessionError> {
    Ok(replay(log, config)?.state.mesh)
}

fn require_stage(state: &SessionState, command: &'static str, stage: u8) -> Result<(), ErrorKind> {
    if state.stage != stage {
        return Err(ErrorKind::Stage { command, stage: state.stage });
    }
    Ok(())
}

fn require_mesh(state: &SessionState, command: &'static str) -> Result<(), ErrorKind> {
    if state.mesh.is_empty() {
        return Err(ErrorKind::EmptyMesh { command });
    }
    Ok(())
}

fn symmetry_plane() -> MirrorPlane {
    MirrorPlane::xy()
}

/// Mirrored copy of a stroke moved onto the surface, or `None` when the
/// stroke lies on the symmetry plane.
fn mirror_stroke(mesh: &TriMesh, points: &[Point]) -> Option<Vec<Point>> {
    if points.is_empty() {
        return None;
    }
    let plane = symmetry_plane();
    let centroid = points.iter().fold(Point::origin(), |acc, p| acc + p.coords / points.len() as f64);
    if plane.signed_distance(&centroid).abs() < MIRROR_SKIP_FRACTION * mesh.bbox_diagonal() {
        return None;
    }
    let query = MeshQuery::new(mesh);
    Some(points.iter().map(|p| query.closest_point(&plane.reflect(p)).map_or(plane.reflect(p), |h| h.point)).collect())
}

fn snap_check(config: &EngineConfig, mesh: &TriMesh, points: &[Point]) -> Result<(), ErrorKind> {
    let query = MeshQuery::new(mesh);
    let stroke = Stroke::on_surface(points.to_vec());
    snap_strokes(&query, std::slice::from_ref(&stroke), config.snap_fraction * mesh.bbox_diagonal()).map_err(engine)?;
    Ok(())
}

fn bind_entry(
    config: &EngineConfig,
    mesh: &TriMesh,
    stroke: &[Point],
    symmetric: bool,
) -> Result<HandleEntry, ErrorKind> {
    let tol = config.snap_fraction * mesh.bbox_diagonal();
    let primary = bind_handle(mesh, &Stroke::on_surface(stroke.to_vec()), tol).map_err(engine)?.vertex_ids;
    let mut ids = primary.clone();
    let mut mirror_of = Vec::new();
    if symmetric {
        if let Some(mirrored) = mirror_stroke(mesh, stroke) {
            let plane = symmetry_plane();
            let x = mesh.positions();
            let extra = bind_handle(mesh, &Stroke::on_surface(mirrored), f64::INFINITY).map_err(engine)?.vertex_ids;
            for w in extra {
                if ids.contains(&w) {
                    continue;
                }
                let image = plane.reflect(&x[w]);
                let nearest = (0..primary.len())
                    .min_by(|&a, &b| (x[primary[a]] - image).norm().total_cmp(&(x[primary[b]] - image).norm()))
                    .expect("primary handle is non-empty");
                ids.push(w);
                mirror_of.push(nearest);
            }
        }
    }
    let curve = HandleCurve::new(mesh, ids, config.anchor_rings).map_err(engine)?;
    let system = prefactorize_in_background(mesh, &curve, config.deform).map_err(engine)?;
    Ok(HandleEntry { stroke: stroke.to_vec(), curve, primary_len: primary.len(), mirror_of, symmetric, system })
}

fn resample_to(points: &[Point], count: usize) -> Vec<Point> {
    if points.len() == count {
        return points.to_vec();
    }
    Stroke::on_surface(points.to_vec()).resample(count)
}

fn apply_command(config: &EngineConfig, state: &mut SessionState, cmd: &Command) -> Result<(), ErrorKind> {
    let drag = state.drag.take();
    match cmd {
        Command::DrawSilhouette { points } => {
            require_stage(state, "draw_silhouette", 1)?;
            if !state.mesh.is_empty() {
                return Err(ErrorKind::NonEmptyMesh { command: "draw_silhouette" });
            }
            let curve = SilhouetteCurve::new(points).map_err(engine)?;
            let lm = config.silhouette_lm.unwrap_or_else(|| default_lm(&curve));
            state.mesh = generate_initial(&curve, lm).map_err(engine)?;
        }
        Command::Extrude { region_stroke, profile_stroke, view } => {
            require_stage(state, "extrude", 1)?;
            require_mesh(state, "extrude")?;
            let region = Stroke::on_surface(region_stroke.clone());
            let profile = Stroke::on_surface(profile_stroke.clone());
            let mut mesh = extrude(&state.mesh, &region, &profile, view, &config.extrude).map_err(engine)?;
            if state.symmetric {
                if let Some(mirrored) = mirror_stroke(&mesh, region_stroke) {
                    let plane = symmetry_plane();
                    let profile_m = Stroke::on_surface(profile_stroke.iter().map(|p| plane.reflect(p)).collect());
                    let view_m = OrthoView {
                        center: plane.reflect(&view.center),
                        forward: plane.reflect_vector(&view.forward),
                        up: plane.reflect_vector(&view.up),
                        ..*view
                    };
                    mesh = extrude(&mesh, &Stroke::on_surface(mirrored), &profile_m, &view_m, &config.extrude)
                        .map_err(engine)?;
                }
            }
            state.mesh = mesh;
        }
        Command::AddCurve { stroke } => {
            require_stage(state, "add_curve", 1)?;
            require_mesh(state, "add_curve")?;
            let entry = bind_entry(config, &state.mesh, stroke, state.symmetric)?;
            state.handles.insert(state.next_handle, entry);
            state.next_handle += 1;
        }
        Command::DeformHandle { handle, targets } => {
            require_stage(state, "deform_handle", 1)?;
            require_mesh(state, "deform_handle")?;
            let rest = match drag {
                Some((h, rest)) if h == *handle => rest,
                _ => state.mesh.clone(),
            };
            let entry = state.handles.get_mut(handle).ok_or(ErrorKind::UnknownHandle(*handle))?;
            if !entry.system.matches(&rest, &entry.curve) {
                let query = MeshQuery::new(&rest);
                let resnapped: Vec<Point> =
                    entry.stroke.iter().map(|p| query.closest_point(p).map_or(*p, |h| h.point)).collect();
                *entry = bind_entry(config, &rest, &resnapped, entry.symmetric)?;
            }
            if targets.is_empty() {
                return Err(ErrorKind::Engine("deform_handle needs at least one target".into()));
            }
            let primary = resample_to(targets, entry.primary_len);
            let plane = symmetry_plane();
            let mut all = primary.clone();
            all.extend(entry.mirror_of.iter().map(|&i| plane.reflect(&primary[i])));
            let curve = entry.curve.clone().with_targets(all).map_err(engine)?;
            entry.system.wait().map_err(engine)?;
            state.mesh = deform(&rest, &curve, &entry.system).map_err(engine)?;
            state.drag = Some((*handle, rest));
        }
        Command::Carve { stroke, field } => {
            require_stage(state, "carve", 2)?;
            require_mesh(state, "carve")?;
            if let Some(r) = field {
                state.detail_field = Some(resolve_field(r, &state.mesh)?);
            }
            snap_check(config, &state.mesh, stroke)?;
            state.pending_carve.push(stroke.clone());
            if state.symmetric {
                if let Some(m) = mirror_stroke(&state.mesh, stroke) {
                    state.pending_carve.push(m);
                }
            }
        }
        Command::CarveCommit => {
            require_stage(state, "carve_commit", 2)?;
            if state.pending_carve.is_empty() {
                return Ok(());
            }
            let field = state.detail_field.as_ref().ok_or(ErrorKind::NoField(FieldSlot::Detail))?;
            let strokes: Vec<Stroke> = state.pending_carve.iter().map(|p| Stroke::on_surface(p.clone())).collect();
            let params: &CarveParams = &config.carve;
            state.mesh = carve_details(&state.mesh, &strokes, field.field.as_ref(), params).map_err(engine)?.mesh;
            let done = std::mem::take(&mut state.pending_carve);
            state.detail_curves.extend(done);
        }
        Command::Refine => {
            require_stage(state, "refine", 1)?;
            require_mesh(state, "refine")?;
            let field = state.coarse_field.as_ref().ok_or(ErrorKind::NoField(FieldSlot::Coarse))?;
            state.mesh = refine_coarse(&state.mesh, field.field.as_ref(), &config.coarse).map_err(engine)?;
        }
        Command::SetField { slot, field } => {
            let binding = Some(resolve_field(field, &state.mesh)?);
            match slot {
                FieldSlot::Coarse => state.coarse_field = binding,
                FieldSlot::Detail => state.detail_field = binding,
            }
        }
        Command::Smooth { stroke } => {
            require_mesh(state, "smooth")?;
            let region = match stroke {
                None => None,
                Some(points) => {
                    snap_check(config, &state.mesh, points)?;
                    let mut seeds = Vec::new();
                    let mut strokes = vec![points.clone()];
                    if state.symmetric {
                        strokes.extend(mirror_stroke(&state.mesh, points));
                    }
                    let query = MeshQuery::new(&state.mesh);
                    for s in &strokes {
                        for p in Stroke::on_surface(s.clone()).densify(0.5 * state.mesh.mean_edge_length()) {
                            if let Some(hit) = query.closest_point(&p) {
                                seeds.extend(state.mesh.faces()[hit.face]);
                            }
                        }
                    }
                    let members = k_ring(&state.mesh, seeds, config.smooth_rings);
                    Some(VertexRegion::new(&state.mesh, members).map_err(engine)?)
                }
            };
            let params = match region {
                Some(r) => FitParams::in_region(config.smooth_lambda, r),
                None => FitParams::new(config.smooth_lambda),
            };
            state.mesh = fit_with_smoothness(&state.mesh, state.mesh.positions(), &params).map_err(engine)?;
        }
        Command::SetSymmetry { enabled } => state.symmetric = *enabled,
        Command::EnterStage { stage, keep_detail_curves } => match (state.stage, *stage) {
            (a, b) if a == b => {}
            (1, 2) => {
                require_mesh(state, "enter_stage")?;
                state.stage = 2;
            }
            (2, 1) => {
                state.stage = 1;
                if *keep_detail_curves {
                    let query = MeshQuery::new(&state.mesh);
                    let resnap = |c: &mut Vec<Point>| {
                        for p in c.iter_mut() {
                            if let Some(h) = query.closest_point(p) {
                                *p = h.point;
                            }
                        }
                    };
                    state.detail_curves.iter_mut().for_each(resnap);
                    state.pending_carve.iter_mut().for_each(resnap);
                } else {
                    state.detail_curves.clear();
                    state.pending_carve.clear();
                }
            }
            (_, b) => return Err(ErrorKind::BadStage(b)),
        },
        Command::Clear => {
            *state = SessionState {
                coarse_field: state.coarse_field.take(),
                detail_field: state.detail_field.take(),
                symmetric: state.symmetric,
                ..SessionState::default()
            };
        }
        Command::Undo => unreachable!("undo is handled by the session"),
    }
    Ok(())
}
