use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::quadrature::triangle_area;
use crate::{Error, Point, Result};

/// Label of a boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundaryLabel {
    Dirichlet,
    Neumann,
    Dynamic,
}

impl BoundaryLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Dirichlet => "dirichlet",
            Self::Neumann => "neumann",
            Self::Dynamic => "dynamic",
        }
    }
}

impl fmt::Display for BoundaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundaryLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dirichlet" => Ok(Self::Dirichlet),
            "neumann" => Ok(Self::Neumann),
            "dynamic" => Ok(Self::Dynamic),
            other => Err(format!("unknown boundary label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triangle {
    pub vertices: [usize; 3],
    pub region: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub label: BoundaryLabel,
}

/// Conforming triangulation with labeled boundary and interface edges.
///
/// Constructed only through [`Mesh::new`] (or the parser), which checks
/// all structural invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<Triangle>,
    boundary_edges: Vec<BoundaryEdge>,
    interface_edges: Vec<[usize; 2]>,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<Triangle>,
        boundary_edges: Vec<BoundaryEdge>,
        interface_edges: Vec<[usize; 2]>,
    ) -> Result<Self> {
        let mesh = Self {
            vertices,
            triangles,
            boundary_edges,
            interface_edges,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        if self.triangles.is_empty() {
            return Err(Error::Invariant("mesh has no triangles".into()));
        }
        for (i, p) in self.vertices.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::Invariant(format!(
                    "vertex {i} has non-finite coordinates"
                )));
            }
        }
        let check = |what: &str, idx: usize, v: &[usize]| -> Result<()> {
            for &k in v {
                if k >= nv {
                    return Err(Error::Invariant(format!(
                        "vertex index out of range: {what} {idx} references vertex {k} of {nv}"
                    )));
                }
            }
            let mut s = v.to_vec();
            s.sort_unstable();
            s.dedup();
            if s.len() != v.len() {
                return Err(Error::Invariant(format!("{what} {idx} repeats a vertex")));
            }
            Ok(())
        };
        for (t, tri) in self.triangles.iter().enumerate() {
            check("triangle", t, &tri.vertices)?;
            let area = triangle_area(&self.triangle_points(t));
            if !(area > 0.0) {
                return Err(Error::Invariant(format!(
                    "triangle {t} is degenerate or not positively oriented (signed area {area:e})"
                )));
            }
        }
        for (e, be) in self.boundary_edges.iter().enumerate() {
            check("boundary edge", e, &be.vertices)?;
        }
        for (e, ie) in self.interface_edges.iter().enumerate() {
            check("interface edge", e, ie)?;
        }

        // directed edge -> triangle; each directed edge may occur once
        let mut directed: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            let v = tri.vertices;
            for k in 0..3 {
                let d = (v[k], v[(k + 1) % 3]);
                if let Some(other) = directed.insert(d, t) {
                    return Err(Error::Invariant(format!(
                        "triangles {other} and {t} overlap: both traverse edge {}-{} in the same direction",
                        d.0, d.1
                    )));
                }
            }
        }
        let mut adjacency: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for &(a, b) in directed.keys() {
            *adjacency.entry(edge_key(a, b)).or_default() += 1;
        }

        let mut labeled: BTreeSet<(usize, usize)> = BTreeSet::new();
        for (e, be) in self.boundary_edges.iter().enumerate() {
            let key = edge_key(be.vertices[0], be.vertices[1]);
            if !labeled.insert(key) {
                return Err(Error::Invariant(format!(
                    "boundary edge {e} ({}-{}) is labeled twice",
                    key.0, key.1
                )));
            }
            let n = adjacency.get(&key).copied().unwrap_or(0);
            if n != 1 {
                return Err(Error::Invariant(format!(
                    "boundary edge {e} ({}-{}) belongs to {n} triangles, expected exactly 1",
                    key.0, key.1
                )));
            }
        }
        for (&key, &n) in &adjacency {
            if n == 1 && !labeled.contains(&key) {
                return Err(Error::Invariant(format!(
                    "boundary edge {}-{} carries no label (labels must partition the boundary)",
                    key.0, key.1
                )));
            }
        }

        let mut iface: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
        for (e, ie) in self.interface_edges.iter().enumerate() {
            let key = edge_key(ie[0], ie[1]);
            if !iface.insert(key) {
                return Err(Error::Invariant(format!(
                    "interface edge {e} ({}-{}) listed twice",
                    key.0, key.1
                )));
            }
            let n = adjacency.get(&key).copied().unwrap_or(0);
            if n != 2 {
                return Err(Error::Invariant(format!(
                    "interface edge {e} ({}-{}) is adjacent to {n} triangles, expected exactly 2",
                    key.0, key.1
                )));
            }
            *degree.entry(key.0).or_default() += 1;
            *degree.entry(key.1).or_default() += 1;
        }
        let boundary_vertices: BTreeSet<usize> = self
            .boundary_edges
            .iter()
            .flat_map(|e| e.vertices)
            .collect();
        for (&v, &deg) in &degree {
            if deg > 2 {
                return Err(Error::Invariant(format!(
                    "interface is not a simple polyline: vertex {v} has {deg} interface edges"
                )));
            }
            if deg == 2 && boundary_vertices.contains(&v) {
                return Err(Error::Invariant(format!(
                    "interface passes through boundary vertex {v} (only endpoints may lie on the boundary)"
                )));
            }
        }
        Ok(())
    }

    /// Parse the line-based mesh text format.
    ///
    /// ```text
    /// # comment
    /// nv nt nbe nie
    /// x y                 (nv lines)
    /// i j k region_id     (nt lines)
    /// i j label           (nbe lines, label in dirichlet|neumann|dynamic)
    /// i j                 (nie lines)
    /// ```
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let parse_err = |line: usize, message: String| Error::Parse { line, message };
        fn fields<const N: usize>(line: usize, l: &str) -> Result<[&str; N]> {
            let parts: Vec<&str> = l.split_whitespace().collect();
            <[&str; N]>::try_from(parts.as_slice()).map_err(|_| Error::Parse {
                line,
                message: format!("expected {N} fields, found {}", parts.len()),
            })
        }
        fn num<T: FromStr>(line: usize, s: &str, what: &str) -> Result<T> {
            s.parse::<T>().map_err(|_| Error::Parse {
                line,
                message: format!("invalid {what} {s:?}"),
            })
        }

        let (hline, header) = lines
            .next()
            .ok_or_else(|| parse_err(0, "empty mesh file".into()))?;
        let [a, b, c, d] = fields::<4>(hline, header)?;
        let nv: usize = num(hline, a, "vertex count")?;
        let nt: usize = num(hline, b, "triangle count")?;
        let nbe: usize = num(hline, c, "boundary edge count")?;
        let nie: usize = num(hline, d, "interface edge count")?;

        let mut next = |what: &str| -> Result<(usize, &str)> {
            lines
                .next()
                .ok_or_else(|| parse_err(0, format!("unexpected end of file while reading {what}")))
        };
        let mut vertices = Vec::new();
        for _ in 0..nv {
            let (ln, l) = next("vertices")?;
            let [x, y] = fields::<2>(ln, l)?;
            let p = Point::new(num(ln, x, "coordinate")?, num(ln, y, "coordinate")?);
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(parse_err(ln, "non-finite coordinate".into()));
            }
            vertices.push(p);
        }
        let index = |ln: usize, s: &str| -> Result<usize> {
            let k: usize = num(ln, s, "vertex index")?;
            if k >= nv {
                return Err(parse_err(
                    ln,
                    format!("vertex index out of range: {k} (mesh has {nv} vertices)"),
                ));
            }
            Ok(k)
        };
        let mut triangles = Vec::new();
        for _ in 0..nt {
            let (ln, l) = next("triangles")?;
            let [i, j, k, r] = fields::<4>(ln, l)?;
            triangles.push(Triangle {
                vertices: [index(ln, i)?, index(ln, j)?, index(ln, k)?],
                region: num(ln, r, "region id")?,
            });
        }
        let mut boundary_edges = Vec::new();
        for _ in 0..nbe {
            let (ln, l) = next("boundary edges")?;
            let [i, j, lab] = fields::<3>(ln, l)?;
            let label = lab.parse::<BoundaryLabel>().map_err(|m| parse_err(ln, m))?;
            boundary_edges.push(BoundaryEdge {
                vertices: [index(ln, i)?, index(ln, j)?],
                label,
            });
        }
        let mut interface_edges = Vec::new();
        for _ in 0..nie {
            let (ln, l) = next("interface edges")?;
            let [i, j] = fields::<2>(ln, l)?;
            interface_edges.push([index(ln, i)?, index(ln, j)?]);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(parse_err(
                ln,
                "trailing content after the last record".into(),
            ));
        }
        Self::new(vertices, triangles, boundary_edges, interface_edges)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_str(&text)
    }

    /// Serialize in the text format accepted by [`Mesh::parse_str`].
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} {} {} {}",
            self.vertices.len(),
            self.triangles.len(),
            self.boundary_edges.len(),
            self.interface_edges.len()
        );
        for p in &self.vertices {
            let _ = writeln!(s, "{:?} {:?}", p.x, p.y);
        }
        for t in &self.triangles {
            let _ = writeln!(
                s,
                "{} {} {} {}",
                t.vertices[0], t.vertices[1], t.vertices[2], t.region
            );
        }
        for e in &self.boundary_edges {
            let _ = writeln!(s, "{} {} {}", e.vertices[0], e.vertices[1], e.label);
        }
        for e in &self.interface_edges {
            let _ = writeln!(s, "{} {}", e[0], e[1]);
        }
        s
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i]
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn interface_edges(&self) -> &[[usize; 2]] {
        &self.interface_edges
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].vertices.map(|i| self.vertices[i])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| triangle_area(&self.triangle_points(t)))
            .sum()
    }

    /// Area enclosed by the boundary loops, each edge oriented as in its triangle.
    pub fn boundary_loop_area(&self) -> f64 {
        let mut oriented: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
        for tri in &self.triangles {
            let v = tri.vertices;
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                oriented.insert(edge_key(a, b), (a, b));
            }
        }
        self.boundary_edges
            .iter()
            .map(|e| {
                let (a, b) = oriented[&edge_key(e.vertices[0], e.vertices[1])];
                let (p, q) = (self.vertices[a], self.vertices[b]);
                0.5 * (p.x * q.y - q.x * p.y)
            })
            .sum()
    }

    /// Total length of boundary edges carrying `label`.
    pub fn boundary_length(&self, label: BoundaryLabel) -> f64 {
        self.boundary_edges
            .iter()
            .filter(|e| e.label == label)
            .map(|e| (self.vertices[e.vertices[1]] - self.vertices[e.vertices[0]]).norm())
            .sum()
    }

    pub fn interface_length(&self) -> f64 {
        self.interface_edges
            .iter()
            .map(|e| (self.vertices[e[1]] - self.vertices[e[0]]).norm())
            .sum()
    }

    /// Triangles adjacent to each undirected edge.
    pub fn edge_adjacency(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let mut adj: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            let v = tri.vertices;
            for k in 0..3 {
                adj.entry(edge_key(v[k], v[(k + 1) % 3]))
                    .or_default()
                    .push(t);
            }
        }
        adj
    }

    /// Largest triangle diameter (longest edge).
    pub fn max_diameter(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let p = self.triangle_points(t);
                (p[1] - p[0])
                    .norm()
                    .max((p[2] - p[1]).norm())
                    .max((p[0] - p[2]).norm())
            })
            .fold(0.0, f64::max)
    }

    /// True when no triangle has an obtuse angle.
    pub fn is_non_obtuse(&self) -> bool {
        (0..self.triangles.len()).all(|t| {
            let p = self.triangle_points(t);
            (0..3).all(|k| {
                let a = p[k];
                let u = p[(k + 1) % 3] - a;
                let v = p[(k + 2) % 3] - a;
                u.dot(&v) >= -1e-12 * u.norm() * v.norm()
            })
        })
    }

    /// Vertices of edges labeled Dirichlet (the closed Dirichlet part).
    pub fn dirichlet_vertices(&self) -> BTreeSet<usize> {
        self.boundary_edges
            .iter()
            .filter(|e| e.label == BoundaryLabel::Dirichlet)
            .flat_map(|e| e.vertices)
            .collect()
    }

    /// Uniform red refinement: every triangle is split into four, labeled
    /// edges into two halves with the same label.
    pub fn refine_uniform(&self) -> Mesh {
        let mut vertices = self.vertices.clone();
        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
            *midpoint.entry(edge_key(a, b)).or_insert_with(|| {
                let p = vertices[a] + (vertices[b] - vertices[a]) * 0.5;
                vertices.push(p);
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for tri in &self.triangles {
            let [a, b, c] = tri.vertices;
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            for v in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
                triangles.push(Triangle {
                    vertices: v,
                    region: tri.region,
                });
            }
        }
        let mut boundary_edges = Vec::with_capacity(2 * self.boundary_edges.len());
        for e in &self.boundary_edges {
            let [a, b] = e.vertices;
            let m = mid(a, b, &mut vertices);
            boundary_edges.push(BoundaryEdge {
                vertices: [a, m],
                label: e.label,
            });
            boundary_edges.push(BoundaryEdge {
                vertices: [m, b],
                label: e.label,
            });
        }
        let mut interface_edges = Vec::with_capacity(2 * self.interface_edges.len());
        for &[a, b] in &self.interface_edges {
            let m = mid(a, b, &mut vertices);
            interface_edges.push([a, m]);
            interface_edges.push([m, b]);
        }
        Mesh {
            vertices,
            triangles,
            boundary_edges,
            interface_edges,
        }
    }

    pub fn stats(&self) -> MeshStats {
        MeshStats {
            vertices: self.vertices.len(),
            triangles: self.triangles.len(),
            dirichlet_edges: self.count_label(BoundaryLabel::Dirichlet),
            neumann_edges: self.count_label(BoundaryLabel::Neumann),
            dynamic_edges: self.count_label(BoundaryLabel::Dynamic),
            interface_edges: self.interface_edges.len(),
            area: self.area(),
            max_diameter: self.max_diameter(),
        }
    }

    fn count_label(&self, label: BoundaryLabel) -> usize {
        self.boundary_edges
            .iter()
            .filter(|e| e.label == label)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshStats {
    pub vertices: usize,
    pub triangles: usize,
    pub dirichlet_edges: usize,
    pub neumann_edges: usize,
    pub dynamic_edges: usize,
    pub interface_edges: usize,
    pub area: f64,
    pub max_diameter: f64,
}
