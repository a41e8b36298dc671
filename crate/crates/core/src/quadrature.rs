//! Gauss rules on intervals, triangles and convex polygons.

use crate::Point;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
///
/// Nodes are found by Newton iteration on the Legendre recurrence, which is
/// accurate to rounding for the small orders used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let n = n as f64;
    let dp = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// A Gauss rule mapped to `[a, b]`.
#[derive(Debug, Clone)]
pub struct IntervalRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl IntervalRule {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        // store on [0, 1]
        let nodes = x.iter().map(|t| 0.5 * (t + 1.0)).collect();
        let weights = w.iter().map(|w| 0.5 * w).collect();
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_a^b f`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let len = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * f(a + t * len))
            .sum::<f64>()
            * len
    }

    /// Nodes and weights on `[0, 1]`.
    pub fn unit(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Collapsed (Duffy) tensor rule on a triangle with `n × n` points.
///
/// Exact for polynomials of total degree `2n - 2`.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    /// Barycentric pairs `(l1, l2)` with `l0 = 1 - l1 - l2`, and weights
    /// normalized so that they sum to one.
    points: Vec<([f64; 3], f64)>,
}

impl TriangleRule {
    pub fn new(n: usize) -> Self {
        let line = IntervalRule::new(n);
        let mut points = Vec::with_capacity(n * n);
        for (s, ws) in line.unit() {
            for (t, wt) in line.unit() {
                let l1 = s;
                let l2 = (1.0 - s) * t;
                let w = 2.0 * ws * wt * (1.0 - s);
                points.push(([1.0 - l1 - l2, l1, l2], w));
            }
        }
        Self { points }
    }

    /// Quadrature points on the triangle with weights summing to its area.
    pub fn points<'a>(&'a self, tri: &'a [Point; 3]) -> impl Iterator<Item = (Point, f64)> + 'a {
        let area = triangle_area(tri).abs();
        self.points.iter().map(move |(l, w)| {
            let p = Point::new(
                l[0] * tri[0].x + l[1] * tri[1].x + l[2] * tri[2].x,
                l[0] * tri[0].y + l[1] * tri[1].y + l[2] * tri[2].y,
            );
            (p, w * area)
        })
    }

    /// Barycentric coordinates and normalized weights.
    pub fn barycentric(&self) -> &[([f64; 3], f64)] {
        &self.points
    }

    pub fn integrate(&self, tri: &[Point; 3], mut f: impl FnMut(Point) -> f64) -> f64 {
        self.points(tri).map(|(p, w)| w * f(p)).sum()
    }
}

/// Signed area of a triangle (positive for counter-clockwise vertices).
pub fn triangle_area(tri: &[Point; 3]) -> f64 {
    let a = tri[1] - tri[0];
    let b = tri[2] - tri[0];
    0.5 * (a.x * b.y - a.y * b.x)
}

/// Signed area of a simple polygon by the shoelace formula.
pub fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        s += p.x * q.y - q.x * p.y;
    }
    0.5 * s
}

/// Integrate over a convex polygon by fanning it into triangles.
pub fn integrate_convex_polygon(
    rule: &TriangleRule,
    poly: &[Point],
    mut f: impl FnMut(Point) -> f64,
) -> f64 {
    let mut total = 0.0;
    for i in 1..poly.len().saturating_sub(1) {
        let tri = [poly[0], poly[i], poly[i + 1]];
        total += rule.integrate(&tri, &mut f);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 1..=12 {
            let rule = IntervalRule::new(n);
            for deg in 0..(2 * n) {
                let got = rule.integrate(0.0, 2.0, |x| x.powi(deg as i32));
                let exact = 2f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
                assert!(
                    (got - exact).abs() < 1e-12 * exact.max(1.0),
                    "n={n} deg={deg}"
                );
            }
        }
    }

    #[test]
    fn triangle_rule_exact_for_total_degree() {
        let tri = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ];
        let rule = TriangleRule::new(3);
        // ∫ x^a y^b over the reference triangle = a! b! / (a+b+2)!
        let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
        for a in 0..=4u32 {
            for b in 0..=(4 - a) {
                let got = rule.integrate(&tri, |p| p.x.powi(a as i32) * p.y.powi(b as i32));
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                assert!((got - exact).abs() < 1e-14, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn polygon_area_of_unit_square() {
        let sq = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        assert_eq!(polygon_area(&sq), 1.0);
        let rule = TriangleRule::new(2);
        let got = integrate_convex_polygon(&rule, &sq, |p| p.x * p.y);
        assert!((got - 0.25).abs() < 1e-15);
    }
}
