use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix2;

use crate::weights::WeightSpec;
use crate::{Error, Point, Result};

/// Matrix-valued bulk diffusion coefficient, not necessarily symmetric.
#[derive(Clone)]
pub enum MatrixField {
    Constant(Matrix2<f64>),
    /// Per triangle region id; regions missing from the map use `default`.
    PerRegion {
        default: Matrix2<f64>,
        regions: BTreeMap<u32, Matrix2<f64>>,
    },
    Function(Arc<dyn Fn(Point) -> Matrix2<f64> + Send + Sync>),
}

impl fmt::Debug for MatrixField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            Self::PerRegion { default, regions } => f
                .debug_struct("PerRegion")
                .field("default", default)
                .field("regions", regions)
                .finish(),
            Self::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl MatrixField {
    pub fn identity() -> Self {
        Self::Constant(Matrix2::identity())
    }

    pub fn scalar(c: f64) -> Self {
        Self::Constant(Matrix2::identity() * c)
    }

    /// Value on a triangle of `region`, if the field is constant there.
    pub fn region_value(&self, region: u32) -> Option<Matrix2<f64>> {
        match self {
            Self::Constant(m) => Some(*m),
            Self::PerRegion { default, regions } => Some(*regions.get(&region).unwrap_or(default)),
            Self::Function(_) => None,
        }
    }

    pub fn eval(&self, x: Point, region: u32) -> Matrix2<f64> {
        match self {
            Self::Function(f) => f(x),
            _ => self.region_value(region).unwrap(),
        }
    }

    /// True when every value is a multiple of the identity.
    pub fn is_scalar(&self) -> bool {
        let scalar =
            |m: &Matrix2<f64>| m[(0, 1)] == 0.0 && m[(1, 0)] == 0.0 && m[(0, 0)] == m[(1, 1)];
        match self {
            Self::Constant(m) => scalar(m),
            Self::PerRegion { default, regions } => scalar(default) && regions.values().all(scalar),
            Self::Function(_) => false,
        }
    }
}

/// Nonnegative scalar coefficient on the bulk or on a surface.
#[derive(Clone)]
pub enum ScalarField {
    Constant(f64),
    /// `scale · |x - point|^power`.
    DistToPoint {
        point: Point,
        power: f64,
        scale: f64,
    },
    Function(Arc<dyn Fn(Point) -> f64 + Send + Sync>),
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Self::DistToPoint {
                point,
                power,
                scale,
            } => f
                .debug_struct("DistToPoint")
                .field("point", point)
                .field("power", power)
                .field("scale", scale)
                .finish(),
            Self::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl ScalarField {
    pub fn eval(&self, x: Point) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::DistToPoint {
                point,
                power,
                scale,
            } => {
                let d = (x - point).norm();
                if *power == 0.0 {
                    *scale
                } else {
                    scale * d.powf(*power)
                }
            }
            Self::Function(f) => f(x),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Self::Constant(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Constant(c) if *c == 0.0)
    }
}

/// Coefficients of the coupled problem.
///
/// The bulk diffusion is `μ(x) = A(x) · μ*(x)` with `μ* = dist(x, S)^γ`
/// when a weight is given and `μ* ≡ 1` otherwise. Surface diffusion is
/// given by its tangential scalar, which is also its own envelope.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    pub bulk: MatrixField,
    pub weight: Option<WeightSpec>,
    pub gd: ScalarField,
    pub sigma: ScalarField,
    pub zeta_bulk: ScalarField,
    pub zeta_gd: ScalarField,
    pub zeta_sigma: ScalarField,
}

impl Default for CoefficientSet {
    fn default() -> Self {
        Self {
            bulk: MatrixField::identity(),
            weight: None,
            gd: ScalarField::Constant(1.0),
            sigma: ScalarField::Constant(1.0),
            zeta_bulk: ScalarField::Constant(1.0),
            zeta_gd: ScalarField::Constant(1.0),
            zeta_sigma: ScalarField::Constant(1.0),
        }
    }
}

impl CoefficientSet {
    /// All relaxation coefficients set to `z`.
    pub fn with_zeta(mut self, z: f64) -> Self {
        self.zeta_bulk = ScalarField::Constant(z);
        self.zeta_gd = ScalarField::Constant(z);
        self.zeta_sigma = ScalarField::Constant(z);
        self
    }

    /// Envelope `μ*` of the bulk coefficient.
    pub fn bulk_envelope(&self, x: Point) -> f64 {
        self.weight.as_ref().map_or(1.0, |w| w.eval(x))
    }

    /// Full bulk coefficient `A(x) μ*(x)`.
    pub fn bulk_coefficient(&self, x: Point, region: u32) -> Matrix2<f64> {
        self.bulk.eval(x, region) * self.bulk_envelope(x)
    }
}

/// Observed envelope constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeReport {
    /// `min (A ξ, ξ)/|ξ|²` over samples, i.e. the smallest eigenvalue of
    /// the symmetric part of `A`.
    pub c1: f64,
    /// `max ‖A‖₂` over samples.
    pub c2: f64,
    pub zeta_min: f64,
    pub zeta_max: f64,
    /// Smallest sampled surface coefficient (`+∞` without surfaces).
    pub surface_min: f64,
}

pub(crate) fn symmetric_min_eig(m: &Matrix2<f64>) -> f64 {
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt()
}

pub(crate) fn spectral_norm(m: &Matrix2<f64>) -> f64 {
    let ata = m.transpose() * m;
    let tr = ata.trace();
    let det = ata.determinant();
    (0.5 * tr + (0.25 * tr * tr - det).max(0.0).sqrt()).sqrt()
}

impl EnvelopeReport {
    pub(crate) fn new() -> Self {
        Self {
            c1: f64::INFINITY,
            c2: 0.0,
            zeta_min: f64::INFINITY,
            zeta_max: f64::NEG_INFINITY,
            surface_min: f64::INFINITY,
        }
    }

    pub(crate) fn sample_bulk(&mut self, a: &Matrix2<f64>) {
        self.c1 = self.c1.min(symmetric_min_eig(a));
        self.c2 = self.c2.max(spectral_norm(a));
    }

    pub(crate) fn sample_zeta(&mut self, z: f64) {
        self.zeta_min = self.zeta_min.min(z);
        self.zeta_max = self.zeta_max.max(z);
    }

    /// Fails unless `c1 > 0`, `ζ > 0` and the surface coefficients are nonnegative.
    pub fn check(&self) -> Result<()> {
        if !(self.c1 > 0.0) {
            return Err(Error::EnvelopeViolation(format!(
                "bulk coefficient is not elliptic relative to its envelope (c1 = {:e})",
                self.c1
            )));
        }
        if !(self.zeta_min > 0.0) || !self.zeta_max.is_finite() {
            return Err(Error::EnvelopeViolation(format!(
                "relaxation coefficient must be positive and bounded (min {:e}, max {:e})",
                self.zeta_min, self.zeta_max
            )));
        }
        if self.surface_min < 0.0 {
            return Err(Error::EnvelopeViolation(format!(
                "surface coefficient violates nonnegativity (min {:e})",
                self.surface_min
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_part_eigenvalue_ignores_skew() {
        let m = Matrix2::new(1.0, 0.5, -0.5, 1.0);
        assert_eq!(symmetric_min_eig(&m), 1.0);
        assert!((spectral_norm(&m) - 1.25f64.sqrt()).abs() < 1e-15);
        let d = Matrix2::new(3.0, 0.0, 0.0, 2.0);
        assert_eq!(symmetric_min_eig(&d), 2.0);
        assert_eq!(spectral_norm(&d), 3.0);
    }

    #[test]
    fn dist_to_point_field() {
        let f = ScalarField::DistToPoint {
            point: Point::new(0.5, 0.5),
            power: 1.0,
            scale: 2.0,
        };
        assert_eq!(f.eval(Point::new(0.5, 1.5)), 2.0);
        assert!(!f.is_zero());
        assert!(ScalarField::Constant(0.0).is_zero());
    }

    #[test]
    fn per_region_lookup_falls_back_to_default() {
        let field = MatrixField::PerRegion {
            default: Matrix2::identity(),
            regions: [(1, Matrix2::identity() * 4.0)].into_iter().collect(),
        };
        assert_eq!(field.region_value(0), Some(Matrix2::identity()));
        assert_eq!(field.region_value(1), Some(Matrix2::identity() * 4.0));
        assert!(field.is_scalar());
        assert!(!MatrixField::Constant(Matrix2::new(1.0, 0.1, 0.0, 1.0)).is_scalar());
    }
}
