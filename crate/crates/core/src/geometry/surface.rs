use std::collections::BTreeMap;

use nalgebra::Vector2;

use super::chart::SurfaceChart;
use super::mesh::{BoundaryLabel, Mesh};
use crate::{Error, Point, Result};

/// Which labeled curve a [`SurfaceMesh`] represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SurfaceKind {
    /// Boundary edges labeled `dynamic`.
    Dynamic,
    /// Interior interface edges.
    Interface,
}

/// Maximal connected run of surface edges, in traversal order.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    /// Surface node indices along the chain; for closed chains the first
    /// node is not repeated at the end.
    pub nodes: Vec<usize>,
    /// Surface edge indices, `edges[i]` joins `nodes[i]` and `nodes[i + 1]` (cyclically).
    pub edges: Vec<usize>,
    pub closed: bool,
    /// Arc-length coordinate of each entry of `nodes`.
    pub arc: Vec<f64>,
}

/// A chart together with the surface nodes sitting at its breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPatch {
    pub chart: SurfaceChart,
    pub chain: usize,
    /// Surface node at each chart breakpoint.
    pub nodes: Vec<usize>,
    /// Surface edges covered by the chart.
    pub edges: Vec<usize>,
}

/// P1 surface space on one labeled curve of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    kind: SurfaceKind,
    vertex_of_node: Vec<usize>,
    node_of_vertex: BTreeMap<usize, usize>,
    points: Vec<Point>,
    edges: Vec<[usize; 2]>,
    chains: Vec<Chain>,
    charts: Vec<ChartPatch>,
}

/// Minimum cosine between an edge and its chart direction; bounds the
/// chart's Lipschitz constant by `sqrt(1/c² - 1)`.
const MIN_ALIGNMENT: f64 = 0.25;

impl SurfaceMesh {
    pub fn from_mesh(mesh: &Mesh, kind: SurfaceKind) -> Result<Self> {
        let raw: Vec<[usize; 2]> = match kind {
            SurfaceKind::Dynamic => mesh
                .boundary_edges()
                .iter()
                .filter(|e| e.label == BoundaryLabel::Dynamic)
                .map(|e| e.vertices)
                .collect(),
            SurfaceKind::Interface => mesh.interface_edges().to_vec(),
        };
        let mut vertex_of_node: Vec<usize> = raw.iter().flatten().copied().collect();
        vertex_of_node.sort_unstable();
        vertex_of_node.dedup();
        let node_of_vertex: BTreeMap<usize, usize> = vertex_of_node
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i))
            .collect();
        let points: Vec<Point> = vertex_of_node.iter().map(|&v| mesh.vertex(v)).collect();
        let edges: Vec<[usize; 2]> = raw.iter().map(|e| e.map(|v| node_of_vertex[&v])).collect();
        for (i, e) in edges.iter().enumerate() {
            if (points[e[1]] - points[e[0]]).norm() == 0.0 {
                return Err(Error::DegenerateGeometry(format!(
                    "surface edge {i} has zero length"
                )));
            }
        }
        let chains = build_chains(&points, &edges)?;
        let mut smesh = Self {
            kind,
            vertex_of_node,
            node_of_vertex,
            points,
            edges,
            chains,
            charts: Vec::new(),
        };
        smesh.charts = smesh.cover_with_charts()?;
        Ok(smesh)
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn n_nodes(&self) -> usize {
        self.vertex_of_node.len()
    }

    /// Bulk mesh vertex of surface node `i`.
    pub fn vertex_of_node(&self, i: usize) -> usize {
        self.vertex_of_node[i]
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertex_of_node
    }

    /// Surface node sitting at bulk vertex `v`, if any.
    pub fn node_of_vertex(&self, v: usize) -> Option<usize> {
        self.node_of_vertex.get(&v).copied()
    }

    pub fn point(&self, i: usize) -> Point {
        self.points[i]
    }

    /// Edges as pairs of surface node indices.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge_points(&self, e: usize) -> [Point; 2] {
        self.edges[e].map(|i| self.points[i])
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edge_points(e);
        (b - a).norm()
    }

    /// Total length (one-dimensional Hausdorff measure).
    pub fn length(&self) -> f64 {
        (0..self.edges.len()).map(|e| self.edge_length(e)).sum()
    }

    pub fn chains(&self) -> &[Chain] {
        &self.chains
    }

    pub fn charts(&self) -> &[ChartPatch] {
        &self.charts
    }

    /// Nodes incident to exactly one surface edge.
    pub fn endpoints(&self) -> Vec<usize> {
        let mut degree = vec![0usize; self.n_nodes()];
        for e in &self.edges {
            degree[e[0]] += 1;
            degree[e[1]] += 1;
        }
        (0..self.n_nodes()).filter(|&i| degree[i] == 1).collect()
    }

    fn cover_with_charts(&self) -> Result<Vec<ChartPatch>> {
        let mut patches = Vec::new();
        for (c, chain) in self.chains.iter().enumerate() {
            let m = chain.edges.len();
            let node_at = |k: usize| chain.nodes[k % chain.nodes.len()];
            let pt = |k: usize| self.points[node_at(k)];
            let mut start = 0;
            loop {
                let mut end = start + 1;
                while end < m {
                    let chord = pt(end + 1) - pt(start);
                    let len = chord.norm();
                    if len <= 1e-14 {
                        break;
                    }
                    let dir = chord / len;
                    let aligned = (start..=end).all(|k| {
                        let e = pt(k + 1) - pt(k);
                        e.dot(&dir) >= MIN_ALIGNMENT * e.norm()
                    });
                    if !aligned {
                        break;
                    }
                    end += 1;
                }
                let pts: Vec<Point> = (start..=end).map(pt).collect();
                let dir: Vector2<f64> = (pts[pts.len() - 1] - pts[0]).normalize();
                let chart = SurfaceChart::from_polyline(&pts, dir)?;
                patches.push(ChartPatch {
                    chart,
                    chain: c,
                    nodes: (start..=end).map(node_at).collect(),
                    edges: (start..end).map(|k| chain.edges[k]).collect(),
                });
                if end >= m {
                    break;
                }
                // overlap the next chart with the last edge of this one
                start = (end - 1).max(start + 1);
            }
        }
        Ok(patches)
    }

    /// Surface gradient of the P1 interpolant through a chart, evaluated at
    /// chart parameter `y`.
    pub fn surface_gradient_in_chart(
        &self,
        values: &[f64],
        patch: usize,
        y: f64,
    ) -> Result<Vector2<f64>> {
        let p = &self.charts[patch];
        let local: Vec<f64> = p.nodes.iter().map(|&i| values[i]).collect();
        p.chart.surface_gradient(&local, y)
    }
}

fn build_chains(points: &[Point], edges: &[[usize; 2]]) -> Result<Vec<Chain>> {
    let n = points.len();
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, e) in edges.iter().enumerate() {
        incident[e[0]].push(k);
        incident[e[1]].push(k);
    }
    if let Some(v) = (0..n).find(|&v| incident[v].len() > 2) {
        return Err(Error::Invariant(format!(
            "surface node at ({}, {}) joins {} edges; surfaces must be simple curves",
            points[v].x,
            points[v].y,
            incident[v].len()
        )));
    }
    let mut used = vec![false; edges.len()];
    let mut chains = Vec::new();
    let starts: Vec<usize> = (0..n)
        .filter(|&v| incident[v].len() == 1)
        .chain(0..n)
        .collect();
    for s in starts {
        let Some(&first) = incident[s].iter().find(|&&k| !used[k]) else {
            continue;
        };
        let mut nodes = vec![s];
        let mut chain_edges = Vec::new();
        let mut cur = s;
        let mut next_edge = Some(first);
        while let Some(k) = next_edge {
            used[k] = true;
            chain_edges.push(k);
            let e = edges[k];
            cur = if e[0] == cur { e[1] } else { e[0] };
            nodes.push(cur);
            next_edge = incident[cur].iter().copied().find(|&j| !used[j]);
        }
        let closed = cur == s && nodes.len() > 2;
        if closed {
            nodes.pop();
        }
        let mut arc = vec![0.0];
        for w in nodes.windows(2) {
            arc.push(arc.last().unwrap() + (points[w[1]] - points[w[0]]).norm());
        }
        chains.push(Chain {
            nodes,
            edges: chain_edges,
            closed,
            arc,
        });
    }
    Ok(chains)
}

/// Constant surface gradient of the P1 interpolant on one edge: the
/// difference quotient along the unit tangent.
pub fn surface_gradient_p1(
    smesh: &SurfaceMesh,
    values: &[f64],
    edge: usize,
) -> Result<Vector2<f64>> {
    if edge >= smesh.edges.len() {
        return Err(Error::InvalidArgument(format!(
            "edge {edge} is not a surface edge"
        )));
    }
    if values.len() != smesh.n_nodes() {
        return Err(Error::InvalidArgument(format!(
            "expected {} nodal values, got {}",
            smesh.n_nodes(),
            values.len()
        )));
    }
    let [a, b] = smesh.edges[edge];
    let d = smesh.points[b] - smesh.points[a];
    let len = d.norm();
    if len == 0.0 {
        return Err(Error::DegenerateGeometry(format!(
            "surface edge {edge} has zero length"
        )));
    }
    Ok(d * ((values[b] - values[a]) / (len * len)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::fixtures::{unit_square, SideLabels};

    fn single_edge(a: Point, b: Point) -> SurfaceMesh {
        let points = vec![a, b];
        let edges = vec![[0, 1]];
        let chains = build_chains(&points, &edges).unwrap();
        let mut s = SurfaceMesh {
            kind: SurfaceKind::Interface,
            vertex_of_node: vec![0, 1],
            node_of_vertex: [(0, 0), (1, 1)].into_iter().collect(),
            points,
            edges,
            chains,
            charts: Vec::new(),
        };
        s.charts = s.cover_with_charts().unwrap();
        s
    }

    #[test]
    fn gradient_examples() {
        let s = single_edge(Point::new(0.0, 0.0), Point::new(1.0, 0.0));
        assert_eq!(
            surface_gradient_p1(&s, &[0.0, 1.0], 0).unwrap(),
            Vector2::new(1.0, 0.0)
        );
        let s = single_edge(Point::new(0.0, 0.0), Point::new(1.0, 1.0));
        let g = surface_gradient_p1(&s, &[0.0, 1.0], 0).unwrap();
        assert!((g - Vector2::new(0.5, 0.5)).norm() < 1e-15);
        // tangency
        assert_eq!(g.dot(&Vector2::new(-1.0, 1.0)), 0.0);
        let s = single_edge(Point::new(0.0, 0.0), Point::new(2.0, 0.0));
        assert_eq!(
            surface_gradient_p1(&s, &[3.0, 3.0], 0).unwrap(),
            Vector2::zeros()
        );
    }

    #[test]
    fn zero_length_edge_is_rejected() {
        let p = Point::new(0.5, 0.5);
        let points = vec![p, p];
        let s = SurfaceMesh {
            kind: SurfaceKind::Interface,
            vertex_of_node: vec![0, 1],
            node_of_vertex: BTreeMap::new(),
            points,
            edges: vec![[0, 1]],
            chains: Vec::new(),
            charts: Vec::new(),
        };
        assert!(matches!(
            surface_gradient_p1(&s, &[0.0, 1.0], 0),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn dynamic_boundary_of_square_is_one_closed_chain() {
        let mesh = unit_square(4, SideLabels::all(BoundaryLabel::Dynamic), false);
        let s = SurfaceMesh::from_mesh(&mesh, SurfaceKind::Dynamic).unwrap();
        assert_eq!(s.n_nodes(), 16);
        assert_eq!(s.chains().len(), 1);
        assert!(s.chains()[0].closed);
        assert!((s.length() - 4.0).abs() < 1e-14);
        let mut covered = vec![false; s.edges().len()];
        for p in s.charts() {
            for &e in &p.edges {
                covered[e] = true;
            }
        }
        assert!(covered.iter().all(|&c| c));
        assert!(s.charts().len() >= 4);
    }

    #[test]
    fn interface_chain_has_arc_coordinates() {
        let mesh = unit_square(4, SideLabels::all(BoundaryLabel::Dirichlet), true);
        let s = SurfaceMesh::from_mesh(&mesh, SurfaceKind::Interface).unwrap();
        assert_eq!(s.chains().len(), 1);
        let chain = &s.chains()[0];
        assert!(!chain.closed);
        assert_eq!(chain.nodes.len(), 5);
        assert!((chain.arc.last().unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(s.endpoints().len(), 2);
        for (i, &v) in s.vertices().iter().enumerate() {
            assert_eq!(s.node_of_vertex(v), Some(i));
            assert_eq!(mesh.vertex(v), s.point(i));
        }
    }
}
