use nalgebra::{Matrix2, Vector2};

use crate::{Error, Point, Result};

/// Relative tolerance used to decide whether a parameter hits a breakpoint.
const BREAKPOINT_TOL: f64 = 1e-12;

/// Lipschitz graph coordinates `g(y) = Q (y, h(y)) + shift` of a curve,
/// with `h` piecewise linear on the breakpoints `ys`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceChart {
    q: Matrix2<f64>,
    shift: Vector2<f64>,
    ys: Vec<f64>,
    hs: Vec<f64>,
}

/// Metric data at a regular point of a chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metric {
    pub g: f64,
    pub g_inv: f64,
    pub sqrt_g: f64,
}

impl SurfaceChart {
    /// `q` must be orthogonal and `ys` strictly increasing with at least two entries.
    pub fn new(q: Matrix2<f64>, shift: Vector2<f64>, ys: Vec<f64>, hs: Vec<f64>) -> Result<Self> {
        if ys.len() < 2 || ys.len() != hs.len() {
            return Err(Error::InvalidArgument(
                "chart needs at least two breakpoints and one height per breakpoint".into(),
            ));
        }
        if ys.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "chart breakpoints must be strictly increasing".into(),
            ));
        }
        if ys.iter().chain(&hs).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("chart data must be finite".into()));
        }
        let defect = (q.transpose() * q - Matrix2::identity()).abs().max();
        if defect > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "chart matrix is not orthogonal (defect {defect:e})"
            )));
        }
        Ok(Self { q, shift, ys, hs })
    }

    /// Chart of a polyline seen as a graph over the unit direction `dir`.
    ///
    /// Fails when the polyline backtracks along `dir`, i.e. is not a graph
    /// over that direction.
    pub fn from_polyline(points: &[Point], dir: Vector2<f64>) -> Result<Self> {
        let e = dir.normalize();
        let n = Vector2::new(-e.y, e.x);
        let q = Matrix2::from_columns(&[e, n]);
        let origin = points[0].coords;
        let ys: Vec<f64> = points.iter().map(|p| (p.coords - origin).dot(&e)).collect();
        let hs: Vec<f64> = points.iter().map(|p| (p.coords - origin).dot(&n)).collect();
        if ys.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::DegenerateGeometry(
                "polyline is not a graph over the chart direction".into(),
            ));
        }
        Self::new(q, origin, ys, hs)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.ys[0], *self.ys.last().unwrap())
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.ys
    }

    pub fn q(&self) -> &Matrix2<f64> {
        &self.q
    }

    /// Largest slope magnitude of `h`.
    pub fn lipschitz_constant(&self) -> f64 {
        (0..self.ys.len() - 1)
            .map(|i| self.slope_of_piece(i).abs())
            .fold(0.0, f64::max)
    }

    fn slope_of_piece(&self, i: usize) -> f64 {
        (self.hs[i + 1] - self.hs[i]) / (self.ys[i + 1] - self.ys[i])
    }

    fn check_inside(&self, y: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if !(y >= lo && y <= hi) {
            return Err(Error::OutsideChart { param: y, lo, hi });
        }
        Ok(())
    }

    /// Piece containing `y`, or an irregular-point error at a breakpoint.
    fn regular_piece(&self, y: f64) -> Result<usize> {
        self.check_inside(y)?;
        let (lo, hi) = self.domain();
        let tol = BREAKPOINT_TOL * (hi - lo);
        if self.ys.iter().any(|&b| (y - b).abs() <= tol) {
            return Err(Error::IrregularPoint(y));
        }
        Ok(self.ys.partition_point(|&b| b < y) - 1)
    }

    pub fn h(&self, y: f64) -> Result<f64> {
        self.check_inside(y)?;
        let i = (self.ys.partition_point(|&b| b <= y).max(1) - 1).min(self.ys.len() - 2);
        let t = (y - self.ys[i]) / (self.ys[i + 1] - self.ys[i]);
        Ok(self.hs[i] + t * (self.hs[i + 1] - self.hs[i]))
    }

    /// `h'(y)` at a regular point.
    pub fn h_prime(&self, y: f64) -> Result<f64> {
        Ok(self.slope_of_piece(self.regular_piece(y)?))
    }

    pub fn map(&self, y: f64) -> Result<Point> {
        let h = self.h(y)?;
        Ok(Point::from(self.q * Vector2::new(y, h) + self.shift))
    }

    /// `g'(y) = Q (1, h'(y))`.
    pub fn tangent(&self, y: f64) -> Result<Vector2<f64>> {
        Ok(self.q * Vector2::new(1.0, self.h_prime(y)?))
    }

    /// Parameter of a point on (or near) the chart image.
    pub fn inverse(&self, x: Point) -> f64 {
        (self.q.transpose() * (x.coords - self.shift)).x
    }

    /// Metric `G = g'ᵀ g' = 1 + h'²` with its inverse and square root.
    pub fn metric(&self, y: f64) -> Result<Metric> {
        let s = self.h_prime(y)?;
        let g = 1.0 + s * s;
        Ok(Metric {
            g,
            g_inv: 1.0 / g,
            sqrt_g: g.sqrt(),
        })
    }

    /// Derivative of the transition map `y ↦ other.inverse(self.map(y))`.
    pub fn transition_derivative(&self, other: &SurfaceChart, y: f64) -> Result<f64> {
        let t = self.tangent(y)?;
        Ok((other.q.transpose() * t).x)
    }

    /// Surface gradient `g' G⁻¹ (u∘g)'` of the function that is linear
    /// between the chart breakpoints with the given nodal `values`.
    pub fn surface_gradient(&self, values: &[f64], y: f64) -> Result<Vector2<f64>> {
        if values.len() != self.ys.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} nodal values, got {}",
                self.ys.len(),
                values.len()
            )));
        }
        let i = self.regular_piece(y)?;
        let du = (values[i + 1] - values[i]) / (self.ys[i + 1] - self.ys[i]);
        let m = self.metric(y)?;
        Ok(self.tangent(y)? * (m.g_inv * du))
    }
}

/// Free-function form of [`SurfaceChart::metric`].
pub fn chart_metric(chart: &SurfaceChart, y: f64) -> Result<Metric> {
    chart.metric(y)
}
