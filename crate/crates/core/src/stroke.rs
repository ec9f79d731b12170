//! User strokes: ordered 3-D polylines tagged with their role.

use serde::{Deserialize, Serialize};

use crate::geom::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrokeKind {
    Silhouette,
    OnSurface,
    HandleTarget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    pub kind: StrokeKind,
    pub points: Vec<Point>,
}

impl Stroke {
    pub fn new(kind: StrokeKind, points: Vec<Point>) -> Self {
        Self { kind, points }
    }

    pub fn on_surface(points: Vec<Point>) -> Self {
        Self::new(StrokeKind::OnSurface, points)
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Point at arc length `s` (clamped to the stroke).
    pub fn point_at(&self, s: f64) -> Point {
        let mut acc = 0.0;
        for w in self.points.windows(2) {
            let len = (w[1] - w[0]).norm();
            if s <= acc + len && len > 0.0 {
                return w[0] + (w[1] - w[0]) * ((s - acc) / len).clamp(0.0, 1.0);
            }
            acc += len;
        }
        *self.points.last().expect("nonempty stroke")
    }

    /// `count` points at uniform arc-length spacing, endpoints included.
    pub fn resample(&self, count: usize) -> Vec<Point> {
        match (self.points.len(), count) {
            (0, _) | (_, 0) => Vec::new(),
            (_, 1) => vec![self.points[0]],
            _ => {
                let len = self.length();
                (0..count).map(|k| self.point_at(len * k as f64 / (count - 1) as f64)).collect()
            }
        }
    }

    /// Points spaced at most `spacing` apart along the stroke.
    pub fn densify(&self, spacing: f64) -> Vec<Point> {
        let len = self.length();
        if self.points.len() < 2 || len == 0.0 || !(spacing > 0.0) {
            return self.points.first().copied().into_iter().collect();
        }
        let count = (len / spacing).ceil() as usize + 1;
        self.resample(count)
    }
}
