//! Independent oracles shared by the integration tests. Nothing here calls
//! the library's quadrature or assembly code.

#![allow(dead_code)]

use formheat::assembly::{
    AssemblyOptions, CoefficientSet, DiscreteOperator, MatrixField, ScalarField,
};
use formheat::geometry::fixtures::{unit_square, SideLabels};
use formheat::geometry::{BoundaryLabel, Mesh, Submanifold};
use formheat::weights::WeightSpec;
use formheat::{Matrix2, Point};

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

fn cross(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

pub fn area(t: &[Point; 3]) -> f64 {
    0.5 * cross(
        (t[1].x - t[0].x, t[1].y - t[0].y),
        (t[2].x - t[0].x, t[2].y - t[0].y),
    )
}

/// `∫_T |x − p|^γ` by fanning `T` from `p` and integrating
/// `R(φ)^{γ+2}/(γ+2)` over the polar angle of each fan triangle.
pub fn point_power_integral(t: &[Point; 3], p: Point, gamma: f64) -> f64 {
    let rule = gauss(48);
    let mut total = 0.0;
    for k in 0..3 {
        let (a, b) = (t[k] - p, t[(k + 1) % 3] - p);
        let span = cross((a.x, a.y), (b.x, b.y)).atan2(a.dot(&b));
        let e = b - a;
        let d = cross((a.x, a.y), (e.x, e.y)) / e.norm();
        if d.abs() < 1e-15 || span == 0.0 {
            continue;
        }
        // angle of the foot of the perpendicular from p to the edge line
        let normal = (-e.y, e.x);
        let sign = if normal.0 * a.x + normal.1 * a.y > 0.0 {
            1.0
        } else {
            -1.0
        };
        let phi_n = (sign * normal.1).atan2(sign * normal.0);
        let dist = d.abs();
        let phi_a = a.y.atan2(a.x);
        let pieces = 8;
        for piece in 0..pieces {
            let lo = phi_a + span * piece as f64 / pieces as f64;
            let hi = phi_a + span * (piece + 1) as f64 / pieces as f64;
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            for &(x, w) in &rule {
                let phi = mid + half * x;
                let r = dist / (phi - phi_n).cos();
                total += w * half * r.powf(gamma + 2.0) / (gamma + 2.0);
            }
        }
    }
    total
}

/// Width of the horizontal slice of a triangle at height `y`.
fn width(t: &[Point; 3], y: f64) -> f64 {
    let mut xs = Vec::new();
    for k in 0..3 {
        let (a, b) = (t[k], t[(k + 1) % 3]);
        if (a.y - y) * (b.y - y) <= 0.0 && a.y != b.y {
            xs.push(a.x + (b.x - a.x) * (y - a.y) / (b.y - a.y));
        } else if a.y == b.y && a.y == y {
            xs.push(a.x);
            xs.push(b.x);
        }
    }
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo).max(0.0)
}

/// `∫_T |y − c|^γ` for a triangle on one side of the line `y = c`, from the
/// piecewise-linear width profile and the closed form of `∫ s^γ (α + β s)`.
fn one_sided_line_integral(t: &[Point; 3], c: f64, gamma: f64) -> f64 {
    let mut ys = [t[0].y, t[1].y, t[2].y];
    ys.sort_by(f64::total_cmp);
    assert!(
        ys[0] >= c - 1e-15 || ys[2] <= c + 1e-15,
        "triangle straddles the line"
    );
    let mut total = 0.0;
    for k in 0..2 {
        let (ya, yb) = (ys[k], ys[k + 1]);
        if yb <= ya {
            continue;
        }
        let (wa, wb) = (width(t, ya), width(t, yb));
        let (sa, sb) = ((ya - c).abs(), (yb - c).abs());
        let (s0, s1, w0, w1) = if sa <= sb {
            (sa, sb, wa, wb)
        } else {
            (sb, sa, wb, wa)
        };
        let beta = (w1 - w0) / (s1 - s0);
        let alpha = w0 - beta * s0;
        let prim = |s: f64| {
            alpha * s.powf(gamma + 1.0) / (gamma + 1.0) + beta * s.powf(gamma + 2.0) / (gamma + 2.0)
        };
        total += prim(s1) - prim(s0);
    }
    total
}

/// Part of a convex polygon on the side `sign · (y − c) ≥ 0`.
fn clip_half_plane(poly: &[Point], c: f64, sign: f64) -> Vec<Point> {
    let inside = |p: &Point| sign * (p.y - c) >= 0.0;
    let mut out = Vec::new();
    for k in 0..poly.len() {
        let (a, b) = (poly[k], poly[(k + 1) % poly.len()]);
        if inside(&a) {
            out.push(a);
        }
        if inside(&a) != inside(&b) {
            let s = (c - a.y) / (b.y - a.y);
            out.push(Point::new(a.x + s * (b.x - a.x), c));
        }
    }
    out
}

/// `∫_T |y − c|^γ`, splitting `T` along the line when it straddles it.
pub fn line_power_integral(t: &[Point; 3], c: f64, gamma: f64) -> f64 {
    let mut total = 0.0;
    for sign in [1.0, -1.0] {
        let piece = clip_half_plane(t, c, sign);
        for k in 1..piece.len().saturating_sub(1) {
            let tri = [piece[0], piece[k], piece[k + 1]];
            if area(&tri).abs() > 0.0 {
                total += one_sided_line_integral(&tri, c, gamma);
            }
        }
    }
    total
}

/// Weight integral of a fixture over one triangle.
#[derive(Debug, Clone, Copy)]
pub enum WeightOracle {
    None,
    Point(Point, f64),
    HorizontalLine(f64, f64),
}

impl WeightOracle {
    pub fn integral(&self, t: &[Point; 3]) -> f64 {
        match *self {
            Self::None => area(t),
            Self::Point(p, g) => point_power_integral(t, p, g),
            Self::HorizontalLine(c, g) => line_power_integral(t, c, g),
        }
    }
}

/// Edge integral of a surface coefficient that is linear on every edge,
/// by the trapezoidal rule.
pub fn linear_edge_integral(mu: &dyn Fn(Point) -> f64, a: Point, b: Point) -> f64 {
    0.5 * (mu(a) + mu(b)) * (b - a).norm()
}

/// Element-loop evaluation of the form `t(u, v)` from vertex values.
pub struct FormOracle<'a> {
    pub mesh: &'a Mesh,
    pub a: Matrix2<f64>,
    pub weight: WeightOracle,
    pub mu_gd: &'a dyn Fn(Point) -> f64,
    pub mu_sigma: &'a dyn Fn(Point) -> f64,
}

fn p1_gradient(t: &[Point; 3], u: [f64; 3]) -> (f64, f64) {
    // solve [x1-x0 y1-y0; x2-x0 y2-y0] g = [u1-u0; u2-u0] by Cramer's rule
    let (a, b) = (t[1].x - t[0].x, t[1].y - t[0].y);
    let (c, d) = (t[2].x - t[0].x, t[2].y - t[0].y);
    let (r1, r2) = (u[1] - u[0], u[2] - u[0]);
    let det = a * d - b * c;
    ((r1 * d - b * r2) / det, (a * r2 - c * r1) / det)
}

impl FormOracle<'_> {
    pub fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut total = 0.0;
        for (k, tri) in self.mesh.triangles().iter().enumerate() {
            let t = self.mesh.triangle_points(k);
            let [i, j, l] = tri.vertices;
            let gu = p1_gradient(&t, [u[i], u[j], u[l]]);
            let gv = p1_gradient(&t, [v[i], v[j], v[l]]);
            let agu = (
                self.a[(0, 0)] * gu.0 + self.a[(0, 1)] * gu.1,
                self.a[(1, 0)] * gu.0 + self.a[(1, 1)] * gu.1,
            );
            total += (agu.0 * gv.0 + agu.1 * gv.1) * self.weight.integral(&t);
        }
        let dynamic = self
            .mesh
            .boundary_edges()
            .iter()
            .filter(|e| e.label == BoundaryLabel::Dynamic)
            .map(|e| (e.vertices, self.mu_gd));
        let interface = self
            .mesh
            .interface_edges()
            .iter()
            .map(|&e| (e, self.mu_sigma));
        for ([i, j], mu) in dynamic.chain(interface) {
            let (a, b) = (self.mesh.vertex(i), self.mesh.vertex(j));
            let len = (b - a).norm();
            total += (u[j] - u[i]) * (v[j] - v[i]) / (len * len) * linear_edge_integral(mu, a, b);
        }
        total
    }
}

/// The four pencils used for form and coercivity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormFixture {
    Nondegenerate,
    SurfaceDegenerate,
    BulkCaseA,
    BulkCaseB,
}

pub const FORM_FIXTURES: [FormFixture; 4] = [
    FormFixture::Nondegenerate,
    FormFixture::SurfaceDegenerate,
    FormFixture::BulkCaseA,
    FormFixture::BulkCaseB,
];

pub fn anisotropic() -> Matrix2<f64> {
    Matrix2::new(2.0, 0.3, 0.3, 1.0)
}

pub fn one(_: Point) -> f64 {
    1.0
}

/// Surface coefficient vanishing on the left half of the interface.
pub fn right_half(x: Point) -> f64 {
    (x.x - 0.5).max(0.0)
}

pub const CASE_A_POINT: (f64, f64) = (0.5, 0.25);

impl FormFixture {
    pub fn name(self) -> &'static str {
        match self {
            Self::Nondegenerate => "nondegenerate",
            Self::SurfaceDegenerate => "surface-degenerate",
            Self::BulkCaseA => "bulk case A",
            Self::BulkCaseB => "bulk case B",
        }
    }

    pub fn mesh(self, n: usize) -> Mesh {
        unit_square(n, SideLabels::mixed(), true)
    }

    pub fn coefficients(self) -> CoefficientSet {
        let mut c = CoefficientSet {
            bulk: MatrixField::Constant(anisotropic()),
            zeta_bulk: ScalarField::Constant(0.5),
            ..Default::default()
        };
        match self {
            Self::Nondegenerate => {}
            Self::SurfaceDegenerate => {
                c.sigma = ScalarField::Function(std::sync::Arc::new(right_half))
            }
            Self::BulkCaseA => {
                let p = Point::new(CASE_A_POINT.0, CASE_A_POINT.1);
                c.weight =
                    Some(WeightSpec::new(Submanifold::points(vec![p]).unwrap(), 1.0).unwrap());
            }
            Self::BulkCaseB => {
                let s = Submanifold::polyline(vec![Point::new(0.0, 0.5), Point::new(1.0, 0.5)])
                    .unwrap();
                c.weight = Some(WeightSpec::new(s, 0.5).unwrap());
            }
        }
        c
    }

    pub fn weight_oracle(self) -> WeightOracle {
        match self {
            Self::Nondegenerate | Self::SurfaceDegenerate => WeightOracle::None,
            Self::BulkCaseA => WeightOracle::Point(Point::new(CASE_A_POINT.0, CASE_A_POINT.1), 1.0),
            Self::BulkCaseB => WeightOracle::HorizontalLine(0.5, 0.5),
        }
    }

    pub fn mu_sigma(self) -> fn(Point) -> f64 {
        match self {
            Self::SurfaceDegenerate => right_half,
            _ => one,
        }
    }

    pub fn operator(self, n: usize) -> DiscreteOperator {
        DiscreteOperator::assemble(
            &self.mesh(n),
            &self.coefficients(),
            &AssemblyOptions::default(),
        )
        .unwrap()
    }
}
