use serde::{Deserialize, Serialize};

use super::{occupancy_from_sdf, FieldError, OccupancyField, ANALYTIC_FALLOFF_FRACTION};
use crate::geom::{Aabb, Point, Vector};

/// Signed-distance primitives and blends (negative inside).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Sphere {
        center: Point,
        radius: f64,
    },
    /// Approximate distance (exact zero set).
    Ellipsoid {
        center: Point,
        radii: Vector,
    },
    Capsule {
        a: Point,
        b: Point,
        radius: f64,
    },
    /// Smooth union with blend radius `blend` (0 = hard union).
    Union {
        children: Vec<Shape>,
        blend: f64,
    },
    /// `base` minus `cut`, smoothed by `blend`.
    Subtract {
        base: Box<Shape>,
        cut: Box<Shape>,
        blend: f64,
    },
}

/// Polynomial smooth minimum; never exceeds `min(a, b)`.
pub fn smooth_min(a: f64, b: f64, k: f64) -> f64 {
    if k <= 0.0 {
        return a.min(b);
    }
    let h = (k - (a - b).abs()).max(0.0) / k;
    a.min(b) - h * h * k * 0.25
}

/// Polynomial smooth maximum; never below `max(a, b)`.
pub fn smooth_max(a: f64, b: f64, k: f64) -> f64 {
    -smooth_min(-a, -b, k)
}

impl Shape {
    pub fn sdf(&self, p: &Point) -> f64 {
        match self {
            Shape::Sphere { center, radius } => (p - center).norm() - radius,
            Shape::Ellipsoid { center, radii } => {
                let q = p - center;
                let k0 = q.component_div(radii).norm();
                let k1 = q.component_div(&radii.component_mul(radii)).norm();
                if k1 == 0.0 {
                    -radii.min()
                } else {
                    k0 * (k0 - 1.0) / k1
                }
            }
            Shape::Capsule { a, b, radius } => {
                let ab = b - a;
                let len2 = ab.norm_squared();
                let t = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
                (p - (a + ab * t)).norm() - radius
            }
            Shape::Union { children, blend } => {
                children.iter().map(|c| c.sdf(p)).reduce(|x, y| smooth_min(x, y, *blend)).unwrap_or(f64::INFINITY)
            }
            Shape::Subtract { base, cut, blend } => smooth_max(base.sdf(p), -cut.sdf(p), *blend),
        }
    }

    /// Box containing the zero set (before blending).
    pub fn bounds(&self) -> Option<Aabb> {
        match self {
            Shape::Sphere { center, radius } => {
                Some(Aabb::new(center - Vector::repeat(*radius), center + Vector::repeat(*radius)))
            }
            Shape::Ellipsoid { center, radii } => Some(Aabb::new(center - radii, center + radii)),
            Shape::Capsule { a, b, radius } => Aabb::from_points([a, b]).map(|bb| bb.expanded(*radius)),
            Shape::Union { children, blend } => children
                .iter()
                .filter_map(Shape::bounds)
                .reduce(|x, y| x.merged(&y))
                .map(|bb| bb.expanded(blend.max(0.0))),
            Shape::Subtract { base, .. } => base.bounds(),
        }
    }

    fn is_valid(&self) -> bool {
        let finite = |p: &Point| p.coords.iter().all(|c| c.is_finite());
        match self {
            Shape::Sphere { center, radius } => finite(center) && *radius > 0.0,
            Shape::Ellipsoid { center, radii } => finite(center) && radii.iter().all(|r| *r > 0.0 && r.is_finite()),
            Shape::Capsule { a, b, radius } => finite(a) && finite(b) && *radius > 0.0,
            Shape::Union { children, blend } => {
                !children.is_empty() && *blend >= 0.0 && children.iter().all(Shape::is_valid)
            }
            Shape::Subtract { base, cut, blend } => *blend >= 0.0 && base.is_valid() && cut.is_valid(),
        }
    }
}

/// Serializable description of an analytic field; `falloff = None` selects
/// 2% of the shape's bbox diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSpec {
    pub shape: Shape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub falloff: Option<f64>,
}

/// Occupancy `clamp(0.5 − sdf / w, 0, 1)` over a [`Shape`].
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticField {
    shape: Shape,
    falloff: f64,
    bbox: Aabb,
}

impl AnalyticField {
    pub fn new(shape: Shape, falloff: f64) -> Result<Self, FieldError> {
        if !(falloff > 0.0) || !falloff.is_finite() {
            return Err(FieldError::BadFalloff(falloff));
        }
        if !shape.is_valid() {
            return Err(FieldError::BadBbox);
        }
        let bounds = shape.bounds().ok_or(FieldError::BadBbox)?;
        let bbox = bounds.expanded(falloff);
        Ok(Self { shape, falloff, bbox })
    }

    /// Falloff = 2% of the shape's bbox diagonal.
    pub fn with_default_falloff(shape: Shape) -> Result<Self, FieldError> {
        let diag = shape.bounds().ok_or(FieldError::BadBbox)?.diagonal();
        Self::new(shape, ANALYTIC_FALLOFF_FRACTION * diag)
    }

    pub fn from_spec(spec: &AnalyticSpec) -> Result<Self, FieldError> {
        match spec.falloff {
            Some(w) => Self::new(spec.shape.clone(), w),
            None => Self::with_default_falloff(spec.shape.clone()),
        }
    }

    pub fn sphere(center: Point, radius: f64, falloff: f64) -> Result<Self, FieldError> {
        Self::new(Shape::Sphere { center, radius }, falloff)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn falloff(&self) -> f64 {
        self.falloff
    }

    pub fn sdf(&self, p: &Point) -> f64 {
        self.shape.sdf(p)
    }
}

impl OccupancyField for AnalyticField {
    fn eval(&self, p: &Point) -> f64 {
        occupancy_from_sdf(self.shape.sdf(p), self.falloff)
    }

    fn bbox(&self) -> Aabb {
        self.bbox
    }
}
