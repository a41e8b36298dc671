//! Integrals of `dist(x, S)^γ` over triangles and squares.
//!
//! When a single primitive of `S` is the nearest one on a whole cell, the
//! integral is evaluated by exact one-dimensional reductions:
//!
//! - point `p`: the divergence theorem for `(x - p)|x - p|^γ` turns the
//!   area integral into `Σ_e h_e/(γ+2) ∫_e |x - p|^γ ds` over the edges,
//!   with `h_e` the signed distance from `p` to the edge line;
//! - segment: the cell is clipped into the two endpoint caps (point
//!   kernel) and the slab on either side of the segment line, where the
//!   integrand only depends on the distance `ℓ` to the line and the chord
//!   length is piecewise linear in `ℓ`.
//!
//! Cells where several primitives compete are subdivided until one
//! primitive wins or the weight is smooth enough for a Gauss rule, whose
//! error is estimated against the four children.

use nalgebra::Vector2;

use super::scan::DyadicCube;
use super::WeightSpec;
use crate::geometry::Primitive;
use crate::quadrature::{integrate_convex_polygon, polygon_area, IntervalRule, TriangleRule};
use crate::{Error, Point, Result};

/// Domain of a weighted cell integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Triangle([Point; 3]),
    Cube(DyadicCube),
}

impl Cell {
    /// Counter-clockwise vertices.
    pub fn polygon(&self) -> Vec<Point> {
        match self {
            Cell::Triangle(t) => {
                if polygon_area(t) >= 0.0 {
                    t.to_vec()
                } else {
                    vec![t[0], t[2], t[1]]
                }
            }
            Cell::Cube(c) => c.corners().to_vec(),
        }
    }
}

/// Controls for the adaptive part of the integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Points per direction of the collapsed Gauss rule on smooth cells.
    pub order: usize,
    /// Requested relative accuracy.
    pub tol: f64,
    pub max_depth: u32,
    /// Maximum number of cells visited before giving up.
    pub budget: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            order: 6,
            tol: 1e-8,
            max_depth: 16,
            budget: 400_000,
        }
    }
}

/// Value and estimated absolute error of a weighted integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellIntegral {
    pub value: f64,
    pub error: f64,
    /// Cells visited by the adaptive driver (zero when exact).
    pub cells: usize,
}

/// `∫_cell dist(x, S)^γ dx` with the default tolerance and the given
/// Gauss order for competing-primitive cells.
pub fn weighted_cell_integral(w: &WeightSpec, cell: &Cell, order: usize) -> Result<f64> {
    if order == 0 {
        return Err(Error::InvalidArgument(
            "quadrature order must be at least 1".into(),
        ));
    }
    let opts = QuadOptions {
        order,
        ..QuadOptions::default()
    };
    Ok(weighted_polygon_integral(w, &cell.polygon(), &opts)?.value)
}

/// `∫_P dist(x, S)^γ dx` over a convex counter-clockwise polygon `P`.
pub fn weighted_polygon_integral(
    w: &WeightSpec,
    poly: &[Point],
    opts: &QuadOptions,
) -> Result<CellIntegral> {
    let gamma = w.gamma();
    if gamma == 0.0 {
        return Ok(CellIntegral {
            value: polygon_area(poly),
            error: 0.0,
            cells: 0,
        });
    }
    let candidates = nearest_candidates(
        w.primitives(),
        poly,
        &(0..w.primitives().len()).collect::<Vec<_>>(),
    );
    if let Some(value) = exact_kernel(w.primitives(), &candidates, poly, gamma) {
        return Ok(CellIntegral {
            value,
            error: 0.0,
            cells: 0,
        });
    }

    let rule = TriangleRule::new(opts.order.max(1));
    let mut state = Adaptive {
        w,
        rule: &rule,
        opts,
        cells: 0,
        error: 0.0,
        tol_density: 0.0,
    };
    // absolute tolerance per unit area, from a coarse estimate of the total
    let area = polygon_area(poly);
    let rough = integrate_convex_polygon(&rule, poly, |x| w.eval(x)).abs();
    state.tol_density = opts.tol * rough.max(f64::MIN_POSITIVE) / area;
    let mut value = 0.0;
    for i in 1..poly.len() - 1 {
        value += state.triangle(&[poly[0], poly[i], poly[i + 1]], &candidates, 0)?;
    }
    let achieved = state.error / value.abs().max(f64::MIN_POSITIVE);
    if achieved > opts.tol {
        return Err(Error::Accuracy {
            achieved,
            requested: opts.tol,
        });
    }
    Ok(CellIntegral {
        value,
        error: state.error,
        cells: state.cells,
    })
}

struct Adaptive<'a> {
    w: &'a WeightSpec,
    rule: &'a TriangleRule,
    opts: &'a QuadOptions,
    cells: usize,
    error: f64,
    tol_density: f64,
}

impl Adaptive<'_> {
    fn triangle(&mut self, tri: &[Point; 3], parent: &[usize], depth: u32) -> Result<f64> {
        self.cells += 1;
        if self.cells > self.opts.budget {
            return Err(Error::Accuracy {
                achieved: f64::INFINITY,
                requested: self.opts.tol,
            });
        }
        let prims = self.w.primitives();
        let candidates = nearest_candidates(prims, tri, parent);
        let gamma = self.w.gamma();
        if let Some(value) = exact_kernel(prims, &candidates, tri, gamma) {
            return Ok(value);
        }
        let area = polygon_area(tri);
        let children = split(tri);
        let (lo, hi) = distance_range(prims, &candidates, tri);
        let smooth = lo > 0.0 && (hi / lo).powf(gamma) <= 4.0;
        if smooth || depth >= self.opts.max_depth {
            let coarse = self.rule.integrate(tri, |x| self.w.eval(x));
            let fine: f64 = children
                .iter()
                .map(|c| self.rule.integrate(c, |x| self.w.eval(x)))
                .sum();
            let err = (fine - coarse).abs();
            if err <= self.tol_density * area || depth >= self.opts.max_depth {
                self.error += err;
                return Ok(fine);
            }
        }
        let mut total = 0.0;
        for c in &children {
            total += self.triangle(c, &candidates, depth + 1)?;
        }
        Ok(total)
    }
}

fn split(t: &[Point; 3]) -> [[Point; 3]; 4] {
    let mid = |a: Point, b: Point| Point::from((a.coords + b.coords) * 0.5);
    let (ab, bc, ca) = (mid(t[0], t[1]), mid(t[1], t[2]), mid(t[2], t[0]));
    [[t[0], ab, ca], [ab, t[1], bc], [ca, bc, t[2]], [ab, bc, ca]]
}

/// Smallest and largest distance from the cell to the nearest candidate.
fn distance_range(prims: &[Primitive], candidates: &[usize], poly: &[Point]) -> (f64, f64) {
    let lo = candidates
        .iter()
        .map(|&i| primitive_polygon_distance(&prims[i], poly))
        .fold(f64::INFINITY, f64::min);
    let hi = candidates
        .iter()
        .map(|&i| {
            poly.iter()
                .map(|&v| prims[i].distance(v))
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    (lo, hi)
}

/// Primitives among `subset` that can be the nearest one somewhere in `poly`.
fn nearest_candidates(prims: &[Primitive], poly: &[Point], subset: &[usize]) -> Vec<usize> {
    if subset.len() <= 1 {
        return subset.to_vec();
    }
    // distance to a convex set is convex, so its maximum over the polygon
    // sits at a vertex
    let best_upper = subset
        .iter()
        .map(|&i| {
            poly.iter()
                .map(|&v| prims[i].distance(v))
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    subset
        .iter()
        .copied()
        .filter(|&i| primitive_polygon_distance(&prims[i], poly) <= best_upper)
        .collect()
}

fn inside_convex(poly: &[Point], x: Point) -> bool {
    let n = poly.len();
    (0..n).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        (b - a).perp(&(x - a)) >= 0.0
    })
}

fn primitive_polygon_distance(p: &Primitive, poly: &[Point]) -> f64 {
    let n = poly.len();
    match *p {
        Primitive::Point(q) => {
            if inside_convex(poly, q) {
                return 0.0;
            }
            (0..n)
                .map(|i| crate::geometry::point_segment_distance(q, poly[i], poly[(i + 1) % n]))
                .fold(f64::INFINITY, f64::min)
        }
        Primitive::Segment(a, b) => {
            if inside_convex(poly, a) || inside_convex(poly, b) {
                return 0.0;
            }
            (0..n)
                .map(|i| {
                    crate::geometry::segment_segment_distance(a, b, poly[i], poly[(i + 1) % n])
                })
                .fold(f64::INFINITY, f64::min)
        }
    }
}

/// Exact integral when one primitive is nearest on the whole polygon, or
/// when all competitors are points (split along their Voronoi cells).
fn exact_kernel(
    prims: &[Primitive],
    candidates: &[usize],
    poly: &[Point],
    gamma: f64,
) -> Option<f64> {
    if let [only] = candidates {
        return Some(primitive_kernel(&prims[*only], poly, gamma));
    }
    let points: Vec<Point> = candidates
        .iter()
        .map(|&i| match prims[i] {
            Primitive::Point(p) => Some(p),
            Primitive::Segment(..) => None,
        })
        .collect::<Option<_>>()?;
    let mut total = 0.0;
    for (i, &p) in points.iter().enumerate() {
        let mut piece = poly.to_vec();
        for (j, &q) in points.iter().enumerate() {
            if i == j || piece.is_empty() || p == q && j > i {
                continue;
            }
            if p == q {
                // duplicate point: the later copy owns nothing
                piece.clear();
                break;
            }
            let mid = Point::from((p.coords + q.coords) * 0.5);
            let n = q - p;
            piece = clip(&piece, |x| -(x - mid).dot(&n));
        }
        if !piece.is_empty() {
            total += point_kernel(&piece, p, gamma);
        }
    }
    Some(total)
}

/// Exact integral of `dist(x, prim)^γ` over a convex polygon.
fn primitive_kernel(prim: &Primitive, poly: &[Point], gamma: f64) -> f64 {
    match *prim {
        Primitive::Point(p) => point_kernel(poly, p, gamma),
        Primitive::Segment(a, b) => segment_kernel(poly, a, b, gamma),
    }
}

/// Keeps the part of a convex polygon where `f(x) ≥ 0` for affine `f`.
fn clip(poly: &[Point], f: impl Fn(Point) -> f64) -> Vec<Point> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let (fp, fq) = (f(p), f(q));
        if fp >= 0.0 {
            out.push(p);
        }
        if (fp > 0.0 && fq < 0.0) || (fp < 0.0 && fq > 0.0) {
            let t = fp / (fp - fq);
            out.push(p + (q - p) * t);
        }
    }
    if out.len() < 3 {
        out.clear();
    }
    out
}

/// `∫_P |x - p|^γ dx` by the edge formula.
fn point_kernel(poly: &[Point], p: Point, gamma: f64) -> f64 {
    let n = poly.len();
    let mut total = 0.0;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let e = b - a;
        let len = e.norm();
        if len == 0.0 {
            continue;
        }
        let u = e / len;
        // positive when p lies to the left of the counter-clockwise edge
        let h = u.perp(&(p - a));
        if h == 0.0 {
            continue;
        }
        total += h * segment_power_integral(a, b, p, gamma) / (gamma + 2.0);
    }
    total
}

/// `∫_{[a, b]} |x - p|^γ ds` along a segment.
pub fn segment_power_integral(a: Point, b: Point, p: Point, gamma: f64) -> f64 {
    let e = b - a;
    let len = e.norm();
    if len == 0.0 {
        return 0.0;
    }
    if gamma == 0.0 {
        return len;
    }
    let u = e / len;
    let h = u.perp(&(p - a)).abs();
    let s0 = (p - a).dot(&u);
    let (ta, tb) = (-s0, len - s0);
    if ta >= 0.0 {
        radial_integral(ta, tb, h, gamma)
    } else if tb <= 0.0 {
        radial_integral(-tb, -ta, h, gamma)
    } else {
        radial_integral(0.0, -ta, h, gamma) + radial_integral(0.0, tb, h, gamma)
    }
}

/// `∫_{t1}^{t2} (t² + h²)^{γ/2} dt` for `0 ≤ t1 ≤ t2`, integrated on
/// panels no longer than their distance to the complex singularities `±ih`.
fn radial_integral(t1: f64, t2: f64, h: f64, gamma: f64) -> f64 {
    if t2 <= t1 {
        return 0.0;
    }
    let rule = panel_rule();
    let f = |t: f64| (t * t + h * h).powf(0.5 * gamma);
    let floor = t2 * 2f64.powi(-50);
    let mut total = 0.0;
    let mut x = t1;
    if x < floor && h < floor {
        // the integrand is t^γ to rounding here
        total += (floor.powf(gamma + 1.0) - x.powf(gamma + 1.0)) / (gamma + 1.0);
        x = floor;
    }
    while x < t2 {
        let step = (x * x + h * h).sqrt();
        let next = if x + 1.5 * step >= t2 { t2 } else { x + step };
        total += rule.integrate(x, next, f);
        x = next;
    }
    total
}

fn panel_rule() -> &'static IntervalRule {
    use std::sync::OnceLock;
    static RULE: OnceLock<IntervalRule> = OnceLock::new();
    RULE.get_or_init(|| IntervalRule::new(12))
}

/// `∫_P dist(x, [a, b])^γ dx`.
fn segment_kernel(poly: &[Point], a: Point, b: Point, gamma: f64) -> f64 {
    let d = b - a;
    let len = d.norm();
    let u = d / len;
    let s = move |x: Point| (x - a).dot(&u);
    let l = move |x: Point| u.perp(&(x - a));
    let mut total = 0.0;
    let cap_a = clip(poly, |x| -s(x));
    if !cap_a.is_empty() {
        total += point_kernel(&cap_a, a, gamma);
    }
    let cap_b = clip(poly, |x| s(x) - len);
    if !cap_b.is_empty() {
        total += point_kernel(&cap_b, b, gamma);
    }
    let slab = clip(&clip(poly, s), |x| len - s(x));
    if !slab.is_empty() {
        let normal = Vector2::new(-u.y, u.x);
        let above = clip(&slab, l);
        if !above.is_empty() {
            total += level_kernel(&above, a, normal, gamma);
        }
        let below = clip(&slab, |x| -l(x));
        if !below.is_empty() {
            total += level_kernel(&below, a, -normal, gamma);
        }
    }
    total
}

/// `∫_Q ℓ(x)^γ dx` with `ℓ(x) = n·(x - a)` for a unit normal `n`, over a
/// convex polygon `Q` on which `ℓ ≥ 0`.
fn level_kernel(poly: &[Point], a: Point, n: Vector2<f64>, gamma: f64) -> f64 {
    let vals: Vec<f64> = poly.iter().map(|&p| n.dot(&(p - a)).max(0.0)).collect();
    let mut cuts = vals.clone();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let m = poly.len();
    // length of {ℓ = c} ∩ Q, measured along the level line
    let chord = |c: f64| -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..m {
            let (la, lb) = (vals[i], vals[(i + 1) % m]);
            if (la - c) * (lb - c) <= 0.0 && la != lb {
                let t = (c - la) / (lb - la);
                let x = poly[i] + (poly[(i + 1) % m] - poly[i]) * t;
                let along = n.perp(&(x - a));
                lo = lo.min(along);
                hi = hi.max(along);
            }
        }
        if hi > lo {
            hi - lo
        } else {
            0.0
        }
    };
    let rule = panel_rule();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let width = t1 - t0;
        // the chord length is linear on (t0, t1); sample it strictly inside
        let (p, q) = (t0 + width / 3.0, t0 + 2.0 * width / 3.0);
        let (cp, cq) = (chord(p), chord(q));
        let c1 = (cq - cp) / (q - p);
        let c0 = cp - c1 * p;
        if width < 0.1 * t0 {
            total += rule.integrate(t0, t1, |t| t.powf(gamma) * (c0 + c1 * t));
        } else {
            let g1 = gamma + 1.0;
            let g2 = gamma + 2.0;
            total += c0 * (t1.powf(g1) - t0.powf(g1)) / g1 + c1 * (t1.powf(g2) - t0.powf(g2)) / g2;
        }
    }
    total
}
