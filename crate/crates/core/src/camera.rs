//! Orthographic view frames shared by rasterization, extrusion and stroke
//! unprojection.

use serde::{Deserialize, Serialize};

use crate::geom::{Point, Vector};

/// An orthographic camera: looks along `forward`, screen x along
/// `forward × up`, screen y along `up`. The visible window is
/// `[-half_width, half_width] × [-half_height, half_height]` around `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrthoView {
    pub center: Point,
    pub forward: Vector,
    pub up: Vector,
    pub half_width: f64,
    pub half_height: f64,
}

impl OrthoView {
    /// Orthonormalizes `up` against `forward`. Returns `None` for parallel or
    /// zero axes or a non-positive window.
    pub fn new(center: Point, forward: Vector, up: Vector, half_width: f64, half_height: f64) -> Option<Self> {
        let f = forward.try_normalize(1e-12)?;
        let u = (up - f * up.dot(&f)).try_normalize(1e-12)?;
        if !(half_width > 0.0 && half_height > 0.0) {
            return None;
        }
        Some(Self { center, forward: f, up: u, half_width, half_height })
    }

    /// Looking down −z with +y up.
    pub fn front(center: Point, half_extent: f64) -> Self {
        Self { center, forward: -Vector::z(), up: Vector::y(), half_width: half_extent, half_height: half_extent }
    }

    pub fn right(&self) -> Vector {
        self.forward.cross(&self.up)
    }

    /// `(x, y, depth)`, depth growing away from the viewer.
    pub fn to_view(&self, p: &Point) -> Vector {
        let d = p - self.center;
        Vector::new(d.dot(&self.right()), d.dot(&self.up), d.dot(&self.forward))
    }

    pub fn from_view(&self, v: &Vector) -> Point {
        self.center + self.right() * v.x + self.up * v.y + self.forward * v.z
    }

    /// Continuous pixel coordinates (column, row) of screen point `(x, y)` in
    /// a `width × height` image; row 0 is the top.
    pub fn to_pixel(&self, x: f64, y: f64, width: usize, height: usize) -> (f64, f64) {
        ((x / self.half_width + 1.0) * 0.5 * width as f64, (1.0 - y / self.half_height) * 0.5 * height as f64)
    }

    /// Screen point at continuous pixel coordinates.
    pub fn from_pixel(&self, col: f64, row: f64, width: usize, height: usize) -> (f64, f64) {
        ((col / width as f64 * 2.0 - 1.0) * self.half_width, (1.0 - row / height as f64 * 2.0) * self.half_height)
    }

    /// Viewing ray through screen point `(x, y)`, starting `back` units
    /// behind the centre plane.
    pub fn ray(&self, x: f64, y: f64, back: f64) -> (Point, Vector) {
        (self.from_view(&Vector::new(x, y, -back)), self.forward)
    }
}
