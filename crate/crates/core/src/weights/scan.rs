use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::cell::{weighted_polygon_integral, QuadOptions};
use super::WeightSpec;
use crate::{Error, Point, Result};

/// Deepest level accepted by the scan.
pub const MAX_SCAN_LEVEL: u32 = 8;

/// The square of edge `2^-l` centred at `2^-l m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicCube {
    pub level: u32,
    pub m: [i64; 2],
}

impl DyadicCube {
    pub fn new(level: u32, m: [i64; 2]) -> Self {
        Self { level, m }
    }

    pub fn edge(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn center(&self) -> Point {
        let e = self.edge();
        Point::new(e * self.m[0] as f64, e * self.m[1] as f64)
    }

    pub fn volume(&self) -> f64 {
        self.edge() * self.edge()
    }

    /// Counter-clockwise corners starting at the lower left.
    pub fn corners(&self) -> [Point; 4] {
        let c = self.center();
        let r = 0.5 * self.edge();
        [
            Point::new(c.x - r, c.y - r),
            Point::new(c.x + r, c.y - r),
            Point::new(c.x + r, c.y + r),
            Point::new(c.x - r, c.y + r),
        ]
    }
}

/// One integrated cube of a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub cube: DyadicCube,
    /// `2^{l(2+γ)} ∫_Q dist(x, S)^γ dx`.
    pub normalized: f64,
}

/// Per-level outcome of a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSummary {
    pub level: u32,
    /// Smallest normalized integral among integrated cubes.
    pub min: f64,
    pub argmin: DyadicCube,
    /// Cubes whose normalized integral was computed.
    pub integrated: usize,
    /// Cubes at distance at least one edge length from `S`, bounded
    /// below without integration.
    pub far: usize,
    /// Smallest lower bound `(2^l dist(Q, S))^γ ≥ 1` over far cubes (`+∞` if none).
    pub far_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub c_min: f64,
    pub argmin: DyadicCube,
    pub levels: Vec<LevelSummary>,
    pub rows: Vec<ScanRow>,
    /// Set when the window does not contain the bounding box of `S`.
    pub window_warning: bool,
}

impl ScanResult {
    /// CSV with header `level,m_x,m_y,normalized`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,m_x,m_y,normalized\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{:.12e}",
                r.cube.level, r.cube.m[0], r.cube.m[1], r.normalized
            );
        }
        s
    }
}

fn cmp_candidates(a: &(f64, DyadicCube), b: &(f64, DyadicCube)) -> Ordering {
    a.0.total_cmp(&b.0)
        .then(a.1.level.cmp(&b.1.level))
        .then(a.1.m.cmp(&b.1.m))
}

/// Normalized lower-bound scan `min_Q 2^{l(2+γ)} ∫_Q dist(x, S)^γ dx`
/// over dyadic cubes of levels `0..=l_max` whose centres lie in `window`.
///
/// Cubes closer to `S` than one edge length are integrated. On the others
/// the weight is at least `(2^l dist)^γ ≥ 1` times `2^{-lγ}`, which bounds
/// their normalized integral from below; such cubes are integrated only
/// when that bound does not already exceed the current minimum.
pub fn muckenhoupt_lower_bound_scan(
    w: &WeightSpec,
    l_max: u32,
    window: (Point, Point),
) -> Result<ScanResult> {
    if l_max > MAX_SCAN_LEVEL {
        return Err(Error::InvalidArgument(format!(
            "scan level {l_max} exceeds the limit {MAX_SCAN_LEVEL}"
        )));
    }
    let (lo, hi) = window;
    if !(lo.x < hi.x && lo.y < hi.y) {
        return Err(Error::InvalidArgument(
            "scan window must have positive extent".into(),
        ));
    }
    let (slo, shi) = w.set().bounding_box();
    let window_warning = !(lo.x <= slo.x && lo.y <= slo.y && hi.x >= shi.x && hi.y >= shi.y);
    let gamma = w.gamma();
    let opts = QuadOptions::default();

    let mut levels = Vec::new();
    let mut rows = Vec::new();
    let mut best: Option<(f64, DyadicCube)> = None;
    for level in 0..=l_max {
        let scale = level as f64;
        let e = scale.exp2();
        let range = |a: f64, b: f64| ((a * e).ceil() as i64)..=((b * e).floor() as i64);
        let cubes: Vec<DyadicCube> = range(lo.x, hi.x)
            .flat_map(|mx| range(lo.y, hi.y).map(move |my| DyadicCube::new(level, [mx, my])))
            .collect();
        if cubes.is_empty() {
            continue;
        }
        let dists: Vec<f64> = cubes.par_iter().map(|c| cube_distance(w, c)).collect();
        let edge = cubes[0].edge();
        let integrate = |c: &DyadicCube| -> Result<ScanRow> {
            let value = weighted_polygon_integral(w, &c.corners(), &opts)?.value;
            Ok(ScanRow {
                cube: *c,
                normalized: value * e.powf(2.0 + gamma),
            })
        };
        let near: Vec<ScanRow> = cubes
            .par_iter()
            .zip(&dists)
            .filter(|(_, &d)| d < edge)
            .map(|(c, _)| integrate(c))
            .collect::<Result<_>>()?;
        let near_min = near
            .iter()
            .map(|r| (r.normalized, r.cube))
            .min_by(cmp_candidates);
        let threshold = near_min.map_or(f64::INFINITY, |m| m.0);
        let far: Vec<(DyadicCube, f64)> = cubes
            .iter()
            .zip(&dists)
            .filter(|(_, &d)| d >= edge)
            .map(|(c, &d)| (*c, (e * d).powf(gamma)))
            .collect();
        let far_bound = far.iter().map(|f| f.1).fold(f64::INFINITY, f64::min);
        let extra: Vec<ScanRow> = far
            .par_iter()
            .filter(|f| f.1 <= threshold)
            .map(|f| integrate(&f.0))
            .collect::<Result<_>>()?;
        let mut level_rows = near;
        level_rows.extend(extra);
        level_rows.sort_by_key(|r| r.cube.m);
        if let Some(m) = level_rows
            .iter()
            .map(|r| (r.normalized, r.cube))
            .min_by(cmp_candidates)
        {
            levels.push(LevelSummary {
                level,
                min: m.0,
                argmin: m.1,
                integrated: level_rows.len(),
                far: far.len(),
                far_bound,
            });
            best = Some(match best {
                Some(b) if cmp_candidates(&b, &m) != Ordering::Greater => b,
                _ => m,
            });
        }
        rows.extend(level_rows);
    }
    let (c_min, argmin) = best.ok_or_else(|| {
        Error::InvalidArgument("scan window contains no cube of integrated type".into())
    })?;
    Ok(ScanResult {
        c_min,
        argmin,
        levels,
        rows,
        window_warning,
    })
}

/// Distance from a cube to `S`.
fn cube_distance(w: &WeightSpec, c: &DyadicCube) -> f64 {
    let corners = c.corners();
    w.primitives()
        .iter()
        .map(|p| match *p {
            crate::geometry::Primitive::Point(q) => box_point_distance(&corners, q),
            crate::geometry::Primitive::Segment(a, b) => {
                if box_point_distance(&corners, a) == 0.0 || box_point_distance(&corners, b) == 0.0
                {
                    return 0.0;
                }
                (0..4)
                    .map(|i| {
                        crate::geometry::segment_segment_distance(
                            a,
                            b,
                            corners[i],
                            corners[(i + 1) % 4],
                        )
                    })
                    .fold(f64::INFINITY, f64::min)
            }
        })
        .fold(f64::INFINITY, f64::min)
}

fn box_point_distance(corners: &[Point; 4], q: Point) -> f64 {
    let dx = (corners[0].x - q.x).max(q.x - corners[2].x).max(0.0);
    let dy = (corners[0].y - q.y).max(q.y - corners[2].y).max(0.0);
    dx.hypot(dy)
}
