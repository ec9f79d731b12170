//! JSON request/response protocol spoken over a persistent connection.
//!
//! Request: `{"id": u64, "cmd": string, "params": object}`. Command names
//! are the snake_case command tags; their params are the command fields.
//! Stroke fields may instead be given in screen space (pixel polyline plus
//! the view that drew it) and are unprojected here, so the logged command
//! always holds model-space points. Queries that do not edit: `get_mesh`,
//! `export_obj`, `get_log`, `render_stack`.

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use byteorder::{ByteOrder, LittleEndian};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{Command, ErrorKind, MeshDelta, Session, SessionError};
use crate::camera::OrthoView;
use crate::geom::{Point, Vector};
use crate::mesh::{obj, MeshQuery, TriMesh};
use crate::raster::{compose_detail_input, render_detail_inputs, write_stack};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub cmd: String,
    #[serde(default)]
    pub params: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub seq: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Response {
    pub id: u64,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<MeshDelta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<MeshBulk>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

impl Response {
    fn error(id: u64, e: &SessionError) -> Self {
        Self {
            id,
            ok: false,
            error: Some(ErrorBody { code: e.kind.code().into(), message: e.kind.to_string(), seq: e.seq }),
            ..Self::default()
        }
    }
}

/// Whole-mesh transfer: base64 of little-endian f32 xyz triples and u32
/// index triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshBulk {
    pub positions: String,
    pub faces: String,
}

impl MeshBulk {
    pub fn encode(mesh: &TriMesh) -> Self {
        let coords: Vec<f32> = mesh.positions().iter().flat_map(|p| [p.x as f32, p.y as f32, p.z as f32]).collect();
        let mut pos = vec![0u8; coords.len() * 4];
        LittleEndian::write_f32_into(&coords, &mut pos);
        let idx: Vec<u32> = mesh.faces().iter().flat_map(|f| f.map(|v| v as u32)).collect();
        let mut faces = vec![0u8; idx.len() * 4];
        LittleEndian::write_u32_into(&idx, &mut faces);
        Self { positions: STANDARD.encode(pos), faces: STANDARD.encode(faces) }
    }

    /// Decodes to f32 coordinates and u32 indices.
    pub fn decode(&self) -> Result<(Vec<f32>, Vec<u32>), String> {
        let pos = STANDARD.decode(&self.positions).map_err(|e| e.to_string())?;
        let faces = STANDARD.decode(&self.faces).map_err(|e| e.to_string())?;
        if pos.len() % 12 != 0 || faces.len() % 12 != 0 {
            return Err("bulk buffers are not whole triples".into());
        }
        let mut coords = vec![0f32; pos.len() / 4];
        LittleEndian::read_f32_into(&pos, &mut coords);
        let mut idx = vec![0u32; faces.len() / 4];
        LittleEndian::read_u32_into(&faces, &mut idx);
        Ok((coords, idx))
    }

    pub fn to_mesh(&self) -> Result<TriMesh, String> {
        let (coords, idx) = self.decode()?;
        let positions = coords.chunks(3).map(|c| Point::new(c[0] as f64, c[1] as f64, c[2] as f64)).collect();
        let faces = idx.chunks(3).map(|f| [f[0] as usize, f[1] as usize, f[2] as usize]).collect::<Vec<_>>();
        if faces.is_empty() {
            return Ok(TriMesh::empty());
        }
        TriMesh::new(positions, faces).map_err(|e| e.to_string())
    }
}

/// A polyline in pixel coordinates of a `width × height` canvas showing
/// `view`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenStroke {
    pub points: Vec<[f64; 2]>,
    pub view: OrthoView,
    pub width: usize,
    pub height: usize,
}

impl ScreenStroke {
    fn screen_xy(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().map(|p| self.view.from_pixel(p[0], p[1], self.width, self.height))
    }

    /// Casts each point onto the mesh; points missing it are dropped.
    pub fn onto_surface(&self, mesh: &TriMesh) -> Result<Vec<Point>, ErrorKind> {
        let query = MeshQuery::new(mesh);
        let bbox = mesh.bbox().ok_or(ErrorKind::EmptyMesh { command: "screen stroke" })?;
        let back = bbox.diagonal() + (bbox.center() - self.view.center).norm() + 1.0;
        let hits: Vec<Point> = self
            .screen_xy()
            .filter_map(|(x, y)| {
                let (origin, dir) = self.view.ray(x, y, back);
                query.first_hit(&origin, &dir).map(|(t, _)| origin + dir * t)
            })
            .collect();
        if hits.is_empty() {
            return Err(ErrorKind::Protocol("stroke misses the mesh".into()));
        }
        Ok(hits)
    }

    /// Places each point on the view plane at view depth `depth`.
    pub fn onto_plane(&self, depth: f64) -> Vec<Point> {
        self.screen_xy().map(|(x, y)| self.view.from_view(&Vector::new(x, y, depth))).collect()
    }

    /// Model-space xy of each point (for side-view silhouettes).
    pub fn model_xy(&self) -> Vec<[f64; 2]> {
        self.onto_plane(0.0).iter().map(|p| [p.x, p.y]).collect()
    }
}

fn mean_depth(view: &OrthoView, points: &[Point]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    points.iter().map(|p| view.to_view(p).z).sum::<f64>() / points.len() as f64
}

fn take_screen(params: &mut Map<String, Value>, key: &str) -> Result<Option<ScreenStroke>, ErrorKind> {
    match params.remove(key) {
        None => Ok(None),
        Some(v) => serde_json::from_value(v).map(Some).map_err(|e| ErrorKind::Protocol(format!("{key}: {e}"))),
    }
}

fn points_value(points: &[Point]) -> Value {
    serde_json::to_value(points).expect("points serialize")
}

/// Builds the model-space command for a request, unprojecting any screen
/// strokes against the live mesh.
pub fn command_from_request(session: &Session, cmd: &str, params: &Value) -> Result<Command, ErrorKind> {
    let mut p = match params {
        Value::Null => Map::new(),
        Value::Object(m) => m.clone(),
        _ => return Err(ErrorKind::Protocol("params must be an object".into())),
    };
    let mesh = session.mesh();
    match cmd {
        "draw_silhouette" => {
            if let Some(s) = take_screen(&mut p, "screen")? {
                p.insert("points".into(), serde_json::to_value(s.model_xy()).expect("xy serializes"));
            }
        }
        "add_curve" | "carve" | "smooth" => {
            if let Some(s) = take_screen(&mut p, "screen")? {
                p.insert("stroke".into(), points_value(&s.onto_surface(mesh)?));
            }
        }
        "extrude" => {
            let region = take_screen(&mut p, "region_screen")?;
            if let Some(s) = &region {
                p.insert("region_stroke".into(), points_value(&s.onto_surface(mesh)?));
                p.entry("view").or_insert(serde_json::to_value(s.view).expect("view serializes"));
            }
            if let Some(s) = take_screen(&mut p, "profile_screen")? {
                let region_points: Vec<Point> = p
                    .get("region_stroke")
                    .cloned()
                    .map(serde_json::from_value)
                    .transpose()
                    .map_err(|e| ErrorKind::Protocol(format!("region_stroke: {e}")))?
                    .unwrap_or_default();
                p.insert("profile_stroke".into(), points_value(&s.onto_plane(mean_depth(&s.view, &region_points))));
                p.entry("view").or_insert(serde_json::to_value(s.view).expect("view serializes"));
            }
        }
        "deform_handle" => {
            if let Some(s) = take_screen(&mut p, "targets_screen")? {
                let id =
                    p.get("handle").and_then(Value::as_u64).ok_or(ErrorKind::Protocol("handle id missing".into()))?;
                let entry = session.state().handles.get(&(id as u32)).ok_or(ErrorKind::UnknownHandle(id as u32))?;
                let current: Vec<Point> = entry.curve.vertex_ids.iter().map(|&v| mesh.positions()[v]).collect();
                p.insert("targets".into(), points_value(&s.onto_plane(mean_depth(&s.view, &current))));
            }
        }
        _ => {}
    }
    p.insert("type".into(), Value::String(cmd.into()));
    serde_json::from_value(Value::Object(p)).map_err(|e| ErrorKind::Protocol(format!("{cmd}: {e}")))
}

impl Session {
    pub fn handle_request(&mut self, req: &Request) -> Response {
        let id = req.id;
        let fail = |kind: ErrorKind| Response::error(id, &SessionError::new(None, kind));
        match req.cmd.as_str() {
            "get_mesh" => Response { id, ok: true, mesh: Some(MeshBulk::encode(self.mesh())), ..Response::default() },
            "export_obj" => Response {
                id,
                ok: true,
                result: Some(Value::String(obj::to_obj_string(self.mesh()))),
                ..Response::default()
            },
            "get_log" => {
                Response { id, ok: true, result: Some(Value::String(self.log().to_jsonl())), ..Response::default() }
            }
            "render_stack" => {
                let size =
                    req.params.get("size").and_then(Value::as_u64).map_or(self.config().raster_size, |s| s as usize);
                let inputs = render_detail_inputs(self.mesh(), &self.state().sketch_strokes(), size);
                let stack = match compose_detail_input(
                    &inputs.sketch,
                    &inputs.normals,
                    &inputs.front_depth,
                    &inputs.back_depth,
                ) {
                    Ok(s) => s,
                    Err(e) => return fail(ErrorKind::Engine(e.to_string())),
                };
                let mut bytes = Vec::new();
                if let Err(e) = write_stack(&stack, &mut bytes) {
                    return fail(ErrorKind::Engine(e.to_string()));
                }
                Response { id, ok: true, result: Some(Value::String(STANDARD.encode(bytes))), ..Response::default() }
            }
            name => {
                let command = match command_from_request(self, name, &req.params) {
                    Ok(c) => c,
                    Err(kind) => return fail(kind),
                };
                let seq = self.next_seq();
                match self.submit(command) {
                    Ok(delta) => Response { id, ok: true, seq: Some(seq), delta: Some(delta), ..Response::default() },
                    Err(e) => Response::error(id, &e),
                }
            }
        }
    }

    /// Parses one text frame and returns the serialized response.
    pub fn handle_text(&mut self, text: &str) -> String {
        let resp = match serde_json::from_str::<Request>(text) {
            Ok(req) => self.handle_request(&req),
            Err(e) => {
                let id = serde_json::from_str::<Value>(text)
                    .ok()
                    .and_then(|v| v.get("id").and_then(Value::as_u64))
                    .unwrap_or(0);
                Response::error(id, &SessionError::new(None, ErrorKind::Protocol(e.to_string())))
            }
        };
        serde_json::to_string(&resp).expect("response serializes")
    }
}
