use crate::{Error, Point, Result};

/// A lower-dimensional set in the plane: finitely many points
/// (codimension 2) or a polyline (codimension 1).
#[derive(Debug, Clone, PartialEq)]
pub enum Submanifold {
    Points(Vec<Point>),
    Polyline(Vec<Point>),
}

/// One primitive of a [`Submanifold`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive {
    Point(Point),
    Segment(Point, Point),
}

impl Submanifold {
    pub fn points(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("point set must be nonempty".into()));
        }
        Ok(Self::Points(points))
    }

    pub fn polyline(points: Vec<Point>) -> Result<Self> {
        match points.len() {
            0 => Err(Error::InvalidArgument("polyline must be nonempty".into())),
            1 => Ok(Self::Points(points)),
            _ => Ok(Self::Polyline(points)),
        }
    }

    /// Codimension in the plane.
    pub fn codimension(&self) -> u32 {
        match self {
            Self::Points(_) => 2,
            Self::Polyline(_) => 1,
        }
    }

    pub fn primitives(&self) -> Vec<Primitive> {
        match self {
            Self::Points(p) => p.iter().map(|&q| Primitive::Point(q)).collect(),
            Self::Polyline(p) => p
                .windows(2)
                .map(|w| {
                    if w[0] == w[1] {
                        Primitive::Point(w[0])
                    } else {
                        Primitive::Segment(w[0], w[1])
                    }
                })
                .collect(),
        }
    }

    pub fn vertices(&self) -> &[Point] {
        match self {
            Self::Points(p) | Self::Polyline(p) => p,
        }
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        let v = self.vertices();
        let mut lo = v[0];
        let mut hi = v[0];
        for p in v {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    pub fn distance(&self, x: Point) -> f64 {
        distance_to_submanifold(self, x)
    }
}

impl Primitive {
    pub fn distance(&self, x: Point) -> f64 {
        match *self {
            Primitive::Point(p) => (x - p).norm(),
            Primitive::Segment(a, b) => point_segment_distance(x, a, b),
        }
    }

    /// Distance from this primitive to the segment `[c, d]`.
    pub fn distance_to_segment(&self, c: Point, d: Point) -> f64 {
        match *self {
            Primitive::Point(p) => point_segment_distance(p, c, d),
            Primitive::Segment(a, b) => segment_segment_distance(a, b, c, d),
        }
    }
}

/// Euclidean distance from `x` to the segment `[a, b]`.
pub fn point_segment_distance(x: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (x - a).norm();
    }
    let t = ((x - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (x - (a + ab * t)).norm()
}

fn cross(u: nalgebra::Vector2<f64>, v: nalgebra::Vector2<f64>) -> f64 {
    u.x * v.y - u.y * v.x
}

/// Distance between segments `[a, b]` and `[c, d]`; zero when they cross.
pub fn segment_segment_distance(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Exact Euclidean distance from `x` to a point set or polyline.
pub fn distance_to_submanifold(s: &Submanifold, x: Point) -> f64 {
    match s {
        Submanifold::Points(pts) => pts
            .iter()
            .map(|p| (x - p).norm())
            .fold(f64::INFINITY, f64::min),
        Submanifold::Polyline(pts) => pts
            .windows(2)
            .map(|w| point_segment_distance(x, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}
