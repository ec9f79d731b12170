//! Orthographic software rasterization of the detail-stage image inputs:
//! sketch/contour image, normal map and front/back depth maps.
//!
//! Back-view convention: the back camera is the front camera reflected
//! through the frame's mid-depth plane. It looks along +z from behind the
//! shape but keeps the front camera's pixel grid (column ↔ x, row ↔ y), so a
//! pixel addresses the same (x, y) line in every map. Its depth runs from 0
//! at the back of the frame to 1 at the front, and the z-test keeps the
//! surface nearest to it.

mod contour;
mod stack;

pub use contour::{render_contours, thin};
pub use stack::{
    compose_detail_input, load_stack, read_stack, save_stack, write_pgm, write_ppm, write_stack, STACK_CHANNELS,
    STACK_MAGIC, STACK_VERSION,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Aabb, Point, Vector};
use crate::mesh::TriMesh;

/// Side length of the detail-stage images.
pub const DEFAULT_SIZE: usize = 256;
/// Frame margin around the mesh bbox, as a fraction of its extent.
pub const FRAME_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RasterError {
    #[error("image dimensions must be positive, got {width}×{height}×{channels}")]
    BadDims { width: usize, height: usize, channels: usize },
    #[error("{image} is {found:?}, expected {expected:?}")]
    DimensionMismatch { image: &'static str, expected: (usize, usize), found: (usize, usize) },
    #[error("{image} has {found} channels, expected {expected}")]
    ChannelCount { image: &'static str, expected: usize, found: usize },
    #[error("not an image stack file: {0}")]
    Format(String),
    #[error("unsupported image stack version {0}")]
    Version(u32),
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for RasterError {
    fn from(e: std::io::Error) -> Self {
        RasterError::Io(e.to_string())
    }
}

/// Row-major, channel-interleaved f32 image; row 0 is the top.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl RasterImage {
    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Result<Self, RasterError> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(RasterError::BadDims { width, height, channels });
        }
        Ok(Self { width, height, channels, data: vec![value; width * height * channels] })
    }

    pub fn from_data(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self, RasterError> {
        let mut img = Self::filled(width, height, channels, 0.0)?;
        if data.len() != img.data.len() {
            return Err(RasterError::Format(format!("{} samples for {width}×{height}×{channels}", data.len())));
        }
        img.data = data;
        Ok(img)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixel(&self, col: usize, row: usize) -> &[f32] {
        let i = (row * self.width + col) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn pixel_mut(&mut self, col: usize, row: usize) -> &mut [f32] {
        let i = (row * self.width + col) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    pub fn get(&self, col: usize, row: usize, channel: usize) -> f32 {
        self.data[(row * self.width + col) * self.channels + channel]
    }

    /// Pixels whose first channel is non-zero, as (col, row).
    pub fn nonzero(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for row in 0..self.height {
            for col in 0..self.width {
                if self.get(col, row, 0) != 0.0 {
                    out.push((col, row));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewSide {
    /// Looks along −z from the +z side.
    Front,
    /// Looks along +z from the −z side, mirrored onto the front pixel grid.
    Back,
}

/// Orthographic camera over a fixed frame: pixel (col, row) covers
/// x ∈ left + [col, col+1)·pixel, y ∈ top − [row, row+1)·pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrthoCamera {
    pub side: ViewSide,
    pub center: Point,
    pub pixel_size: f64,
    /// Half of the depth range covered by [0, 1].
    pub half_depth: f64,
    pub width: usize,
    pub height: usize,
}

impl OrthoCamera {
    /// Frames `bbox` with a 5% margin at `width × height`.
    pub fn fit(bbox: &Aabb, side: ViewSide, width: usize, height: usize) -> Self {
        let e = bbox.extent();
        let (w, h) = (width.max(1) as f64, height.max(1) as f64);
        let mut pixel_size = (1.0 + FRAME_MARGIN) * (e.x / w).max(e.y / h);
        if !(pixel_size > 0.0) {
            pixel_size = (1.0 + FRAME_MARGIN) * e.z.max(1.0) / w.min(h);
        }
        let mut half_depth = 0.5 * (1.0 + FRAME_MARGIN) * e.z;
        if !(half_depth > 0.0) {
            half_depth = pixel_size;
        }
        Self { side, center: bbox.center(), pixel_size, half_depth, width, height }
    }

    /// Frames the mesh bbox (unit cube at the origin for an empty mesh).
    pub fn for_mesh(mesh: &TriMesh, side: ViewSide, width: usize, height: usize) -> Self {
        let bbox = mesh.bbox().unwrap_or_else(|| Aabb::new(Point::new(-0.5, -0.5, -0.5), Point::new(0.5, 0.5, 0.5)));
        Self::fit(&bbox, side, width, height)
    }

    /// The same frame seen from the other side.
    pub fn mirrored(&self) -> Self {
        let side = match self.side {
            ViewSide::Front => ViewSide::Back,
            ViewSide::Back => ViewSide::Front,
        };
        Self { side, ..*self }
    }

    /// Unit vector from the surface toward the camera.
    pub fn toward_viewer(&self) -> Vector {
        match self.side {
            ViewSide::Front => Vector::z(),
            ViewSide::Back => -Vector::z(),
        }
    }

    /// Continuous (col, row, depth); depth 0 is the near frame plane.
    pub fn project(&self, p: &Point) -> (f64, f64, f64) {
        let col = (p.x - self.center.x) / self.pixel_size + 0.5 * self.width as f64;
        let row = (self.center.y - p.y) / self.pixel_size + 0.5 * self.height as f64;
        let dz = (p.z - self.center.z) / (2.0 * self.half_depth);
        let depth = match self.side {
            ViewSide::Front => 0.5 - dz,
            ViewSide::Back => 0.5 + dz,
        };
        (col, row, depth)
    }

    /// World (x, y) of a continuous pixel position.
    pub fn unproject_xy(&self, col: f64, row: f64) -> (f64, f64) {
        (
            self.center.x + (col - 0.5 * self.width as f64) * self.pixel_size,
            self.center.y - (row - 0.5 * self.height as f64) * self.pixel_size,
        )
    }

    /// World z at normalized depth `d`.
    pub fn depth_to_z(&self, d: f64) -> f64 {
        let dz = match self.side {
            ViewSide::Front => 0.5 - d,
            ViewSide::Back => d - 0.5,
        };
        self.center.z + dz * 2.0 * self.half_depth
    }
}

/// Per-pixel nearest face, barycentrics and depth (unclamped, ∞ = empty).
#[derive(Debug, Clone)]
pub struct GBuffer {
    pub width: usize,
    pub height: usize,
    pub depth: Vec<f64>,
    pub face: Vec<Option<usize>>,
    pub bary: Vec<[f64; 3]>,
}

impl GBuffer {
    pub fn covered(&self, col: usize, row: usize) -> bool {
        self.face[row * self.width + col].is_some()
    }
}

/// Z-buffers every face. Pixel centres on a shared edge belong to both
/// faces; ties in depth keep the lower face index.
pub fn rasterize(mesh: &TriMesh, cam: &OrthoCamera) -> GBuffer {
    let (w, h) = (cam.width, cam.height);
    let mut g = GBuffer {
        width: w,
        height: h,
        depth: vec![f64::INFINITY; w * h],
        face: vec![None; w * h],
        bary: vec![[0.0; 3]; w * h],
    };
    for (f, tri) in mesh.faces().iter().enumerate() {
        let p = tri.map(|v| cam.project(&mesh.positions()[v]));
        let area = (p[1].0 - p[0].0) * (p[2].1 - p[0].1) - (p[2].0 - p[0].0) * (p[1].1 - p[0].1);
        if area.abs() < 1e-12 {
            continue;
        }
        let min_c = p.iter().map(|q| q.0).fold(f64::INFINITY, f64::min);
        let max_c = p.iter().map(|q| q.0).fold(f64::NEG_INFINITY, f64::max);
        let min_r = p.iter().map(|q| q.1).fold(f64::INFINITY, f64::min);
        let max_r = p.iter().map(|q| q.1).fold(f64::NEG_INFINITY, f64::max);
        let c0 = (min_c - 0.5).ceil().max(0.0) as usize;
        let r0 = (min_r - 0.5).ceil().max(0.0) as usize;
        let c1 = ((max_c - 0.5).floor()).min(w as f64 - 1.0);
        let r1 = ((max_r - 0.5).floor()).min(h as f64 - 1.0);
        if c1 < 0.0 || r1 < 0.0 {
            continue;
        }
        let eps = -1e-9 * area.abs();
        for row in r0..=r1 as usize {
            let y = row as f64 + 0.5;
            for col in c0..=c1 as usize {
                let x = col as f64 + 0.5;
                let e0 = (p[2].0 - p[1].0) * (y - p[1].1) - (x - p[1].0) * (p[2].1 - p[1].1);
                let e1 = (p[0].0 - p[2].0) * (y - p[2].1) - (x - p[2].0) * (p[0].1 - p[2].1);
                let e2 = (p[1].0 - p[0].0) * (y - p[0].1) - (x - p[0].0) * (p[1].1 - p[0].1);
                let (e0, e1, e2) = if area > 0.0 { (e0, e1, e2) } else { (-e0, -e1, -e2) };
                if e0 < eps || e1 < eps || e2 < eps {
                    continue;
                }
                let b = [e0 / area.abs(), e1 / area.abs(), e2 / area.abs()];
                let d = b[0] * p[0].2 + b[1] * p[1].2 + b[2] * p[2].2;
                let i = row * w + col;
                if d < g.depth[i] {
                    g.depth[i] = d;
                    g.face[i] = Some(f);
                    g.bary[i] = b;
                }
            }
        }
    }
    g
}

/// Normalized depth in [0, 1]; background pixels are exactly 1.
pub fn render_depth(mesh: &TriMesh, cam: &OrthoCamera) -> RasterImage {
    depth_image(&rasterize(mesh, cam))
}

fn depth_image(g: &GBuffer) -> RasterImage {
    let data =
        g.depth.iter().zip(&g.face).map(|(&d, f)| if f.is_some() { d.clamp(0.0, 1.0) as f32 } else { 1.0 }).collect();
    RasterImage::from_data(g.width, g.height, 1, data).expect("buffer matches dimensions")
}

/// World-space unit normals interpolated from vertex normals; background
/// pixels are (0, 0, 0).
pub fn render_normals(mesh: &TriMesh, cam: &OrthoCamera) -> RasterImage {
    let g = rasterize(mesh, cam);
    let vn = mesh.vertex_normals();
    let mut img = RasterImage::filled(g.width, g.height, 3, 0.0).expect("camera dimensions are positive");
    for row in 0..g.height {
        for col in 0..g.width {
            let i = row * g.width + col;
            let Some(f) = g.face[i] else { continue };
            let tri = mesh.faces()[f];
            let b = g.bary[i];
            let n = vn[tri[0]] * b[0] + vn[tri[1]] * b[1] + vn[tri[2]] * b[2];
            let n = n.try_normalize(1e-12).unwrap_or_else(|| mesh.face_normal(f));
            let px = img.pixel_mut(col, row);
            for c in 0..3 {
                px[c] = n[c] as f32;
            }
        }
    }
    img
}

/// Binary coverage mask of the mesh.
pub fn render_mask(mesh: &TriMesh, cam: &OrthoCamera) -> RasterImage {
    let g = rasterize(mesh, cam);
    let data = g.face.iter().map(|f| if f.is_some() { 1.0 } else { 0.0 }).collect();
    RasterImage::from_data(g.width, g.height, 1, data).expect("buffer matches dimensions")
}

/// The four detail-stage inputs at `size × size`: contour/sketch image S,
/// front normals N, front depth D_f and back depth D_b, all in one frame.
pub struct DetailInputs {
    pub sketch: RasterImage,
    pub normals: RasterImage,
    pub front_depth: RasterImage,
    pub back_depth: RasterImage,
}

pub fn render_detail_inputs(mesh: &TriMesh, strokes: &[crate::stroke::Stroke], size: usize) -> DetailInputs {
    let front = OrthoCamera::for_mesh(mesh, ViewSide::Front, size, size);
    DetailInputs {
        sketch: render_contours(mesh, &front, strokes),
        normals: render_normals(mesh, &front),
        front_depth: render_depth(mesh, &front),
        back_depth: render_depth(mesh, &front.mirrored()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::grid;

    #[test]
    fn empty_mesh_is_background() {
        let cam = OrthoCamera::for_mesh(&TriMesh::empty(), ViewSide::Front, 8, 8);
        let d = render_depth(&TriMesh::empty(), &cam);
        assert!(d.data().iter().all(|&v| v == 1.0));
        assert!(render_normals(&TriMesh::empty(), &cam).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn facing_plane_normals() {
        let g = grid(6, 6, 2.0, 2.0);
        let cam = OrthoCamera::fit(
            &Aabb::new(Point::new(-1.5, -1.5, -1.0), Point::new(1.5, 1.5, 1.0)),
            ViewSide::Front,
            16,
            16,
        );
        let n = render_normals(&g, &cam);
        let mut covered = 0;
        for row in 0..16 {
            for col in 0..16 {
                let px = n.pixel(col, row);
                if px != [0.0, 0.0, 0.0] {
                    covered += 1;
                    assert_eq!(px, [0.0, 0.0, 1.0]);
                }
            }
        }
        assert!(covered > 50);
    }

    #[test]
    fn camera_round_trip() {
        let cam =
            OrthoCamera::fit(&Aabb::new(Point::new(0.0, 0.0, 0.0), Point::new(2.0, 1.0, 1.0)), ViewSide::Back, 64, 32);
        let p = Point::new(0.3, 0.9, 0.2);
        let (c, r, d) = cam.project(&p);
        let (x, y) = cam.unproject_xy(c, r);
        assert!((x - p.x).abs() < 1e-12 && (y - p.y).abs() < 1e-12);
        assert!((cam.depth_to_z(d) - p.z).abs() < 1e-12);
    }

    #[test]
    fn bad_dims() {
        assert!(RasterImage::filled(0, 4, 1, 0.0).is_err());
    }
}
