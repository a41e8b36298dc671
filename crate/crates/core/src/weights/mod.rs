//! Distance weights `dist(x, S)^γ`, their exact and adaptive cell
//! integrals, and the dyadic-cube lower-bound scan.

mod cell;
mod scan;

use std::fmt;

pub use cell::{
    segment_power_integral, weighted_cell_integral, weighted_polygon_integral, Cell, CellIntegral,
    QuadOptions,
};
pub use scan::{muckenhoupt_lower_bound_scan, DyadicCube, LevelSummary, ScanResult, ScanRow};

use crate::geometry::{BoundaryLabel, Mesh, Primitive, Submanifold};
use crate::{Error, Point, Result};

/// The weight `x ↦ dist(x, S)^γ` for a point set or polyline `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpec {
    set: Submanifold,
    gamma: f64,
    primitives: Vec<Primitive>,
}

impl WeightSpec {
    /// Requires `0 ≤ γ < k` with `k` the codimension of `set`.
    pub fn new(set: Submanifold, gamma: f64) -> Result<Self> {
        let k = f64::from(set.codimension());
        if !(gamma >= 0.0 && gamma < k) {
            return Err(Error::InvalidArgument(format!(
                "weight exponent must satisfy 0 <= gamma < {k} for this set, got {gamma}"
            )));
        }
        Ok(Self::new_unchecked(set, gamma))
    }

    /// Skips the `γ < k` check, for experiments outside the admissible
    /// range. Panics on negative or non-finite `γ`.
    pub fn new_unchecked(set: Submanifold, gamma: f64) -> Self {
        assert!(
            gamma.is_finite() && gamma >= 0.0,
            "weight exponent must be finite and nonnegative"
        );
        let primitives = merge_collinear(set.primitives());
        Self {
            set,
            gamma,
            primitives,
        }
    }

    pub fn set(&self) -> &Submanifold {
        &self.set
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn codimension(&self) -> u32 {
        self.set.codimension()
    }

    /// Primitives of `S`, with collinear consecutive segments merged.
    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    /// `γ < k`.
    pub fn is_admissible(&self) -> bool {
        self.gamma < f64::from(self.codimension())
    }

    pub fn distance(&self, x: Point) -> f64 {
        self.primitives
            .iter()
            .map(|p| p.distance(x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn eval(&self, x: Point) -> f64 {
        weight_eval(self, x)
    }
}

fn merge_collinear(prims: Vec<Primitive>) -> Vec<Primitive> {
    let mut out: Vec<Primitive> = Vec::with_capacity(prims.len());
    for p in prims {
        if let (Some(Primitive::Segment(a, b)), Primitive::Segment(c, d)) = (out.last().copied(), p)
        {
            let u = b - a;
            let v = d - c;
            let cross = u.x * v.y - u.y * v.x;
            if c == b && u.dot(&v) > 0.0 && cross.abs() <= 1e-12 * u.norm() * v.norm() {
                *out.last_mut().unwrap() = Primitive::Segment(a, d);
                continue;
            }
        }
        out.push(p);
    }
    out
}

/// `dist(x, S)^γ`, identically one when `γ = 0`.
pub fn weight_eval(w: &WeightSpec, x: Point) -> f64 {
    if w.gamma == 0.0 {
        return 1.0;
    }
    w.distance(x).powf(w.gamma)
}

/// Where the bulk weight degenerates relative to the dynamic boundary and
/// the interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BulkCase {
    /// `γ = 0`: no degeneration.
    Nondegenerate,
    /// `S` stays away from the dynamic boundary and the interface.
    A,
    /// `S` touches the closure of the dynamic boundary or the interface.
    B,
}

impl BulkCase {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Nondegenerate => "N",
            Self::A => "A",
            Self::B => "B",
        }
    }
}

impl fmt::Display for BulkCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of [`classify_case`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub case: BulkCase,
    /// Set in case B with `γ ≥ 1`, where the trace estimates fail.
    pub outside_theory: bool,
    /// Distance from `S` to the dynamic boundary and interface edges
    /// (`+∞` when there are none).
    pub distance: f64,
    /// Separation tolerance that was applied.
    pub tolerance: f64,
}

/// Classifies the weight against the mesh's dynamic and interface edges.
///
/// `separation` defaults to the largest triangle diameter: below mesh
/// resolution the two cases cannot be told apart.
pub fn classify_case(w: &WeightSpec, mesh: &Mesh, separation: Option<f64>) -> Classification {
    let tolerance = separation.unwrap_or_else(|| mesh.max_diameter());
    let edges = mesh
        .boundary_edges()
        .iter()
        .filter(|e| e.label == BoundaryLabel::Dynamic)
        .map(|e| e.vertices)
        .chain(mesh.interface_edges().iter().copied());
    let mut distance = f64::INFINITY;
    for [i, j] in edges {
        let (c, d) = (mesh.vertex(i), mesh.vertex(j));
        for p in &w.primitives {
            distance = distance.min(p.distance_to_segment(c, d));
        }
    }
    let case = if w.gamma == 0.0 {
        BulkCase::Nondegenerate
    } else if distance > tolerance {
        BulkCase::A
    } else {
        BulkCase::B
    };
    Classification {
        case,
        outside_theory: case == BulkCase::B && w.gamma >= 1.0,
        distance,
        tolerance,
    }
}
