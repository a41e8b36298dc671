use std::collections::BTreeSet;

use crate::geometry::{Mesh, SurfaceKind, SurfaceMesh};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::{Error, Point, Result};

/// Free degrees of freedom of the bulk, the dynamic boundary and the
/// interface.
///
/// Vertices on the closed Dirichlet boundary are eliminated, together
/// with any extra surface endpoints configured as Dirichlet. A surface
/// node is free exactly when its bulk vertex is free.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    n_vertices: usize,
    constrained: BTreeSet<usize>,
    free: Vec<usize>,
    dof_of_vertex: Vec<Option<usize>>,
    gd: SurfaceMesh,
    sigma: SurfaceMesh,
    gd_free: Vec<usize>,
    sigma_free: Vec<usize>,
    points: Vec<Point>,
}

impl DofMap {
    /// `extra_dirichlet` lists mesh vertices that are endpoints of the
    /// dynamic boundary or the interface and should be held at zero even
    /// though they are not on a Dirichlet edge.
    pub fn new(mesh: &Mesh, extra_dirichlet: &[usize]) -> Result<Self> {
        let gd = SurfaceMesh::from_mesh(mesh, SurfaceKind::Dynamic)?;
        let sigma = SurfaceMesh::from_mesh(mesh, SurfaceKind::Interface)?;
        let mut constrained = mesh.dirichlet_vertices();
        let endpoints: BTreeSet<usize> = gd
            .endpoints()
            .into_iter()
            .map(|i| gd.vertex_of_node(i))
            .chain(
                sigma
                    .endpoints()
                    .into_iter()
                    .map(|i| sigma.vertex_of_node(i)),
            )
            .collect();
        for &v in extra_dirichlet {
            if !endpoints.contains(&v) {
                return Err(Error::Consistency(format!(
                    "vertex {v} is not an endpoint of the dynamic boundary or the interface"
                )));
            }
            constrained.insert(v);
        }
        let n_vertices = mesh.n_vertices();
        let mut dof_of_vertex = vec![None; n_vertices];
        let mut free = Vec::new();
        for (v, slot) in dof_of_vertex.iter_mut().enumerate() {
            if !constrained.contains(&v) {
                *slot = Some(free.len());
                free.push(v);
            }
        }
        let free_nodes = |s: &SurfaceMesh| {
            (0..s.n_nodes())
                .filter(|&i| !constrained.contains(&s.vertex_of_node(i)))
                .collect()
        };
        let gd_free = free_nodes(&gd);
        let sigma_free = free_nodes(&sigma);
        Ok(Self {
            n_vertices,
            constrained,
            free,
            dof_of_vertex,
            gd,
            sigma,
            gd_free,
            sigma_free,
            points: mesh.vertices().to_vec(),
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_bulk(&self) -> usize {
        self.free.len()
    }

    pub fn n_gd(&self) -> usize {
        self.gd_free.len()
    }

    pub fn n_sigma(&self) -> usize {
        self.sigma_free.len()
    }

    /// Length of a block vector `(bulk, Γ_d, Σ)`.
    pub fn n_block(&self) -> usize {
        self.n_bulk() + self.n_gd() + self.n_sigma()
    }

    pub fn constrained(&self) -> &BTreeSet<usize> {
        &self.constrained
    }

    /// Mesh vertex of each free bulk dof.
    pub fn free_vertices(&self) -> &[usize] {
        &self.free
    }

    pub fn dof_of_vertex(&self, v: usize) -> Option<usize> {
        self.dof_of_vertex[v]
    }

    pub fn gd(&self) -> &SurfaceMesh {
        &self.gd
    }

    pub fn sigma(&self) -> &SurfaceMesh {
        &self.sigma
    }

    pub fn surface(&self, kind: SurfaceKind) -> &SurfaceMesh {
        match kind {
            SurfaceKind::Dynamic => &self.gd,
            SurfaceKind::Interface => &self.sigma,
        }
    }

    /// Free surface nodes of a surface, as surface node indices.
    pub fn surface_free(&self, kind: SurfaceKind) -> &[usize] {
        match kind {
            SurfaceKind::Dynamic => &self.gd_free,
            SurfaceKind::Interface => &self.sigma_free,
        }
    }

    /// Bulk dof of each free node of a surface.
    pub fn surface_bulk_dofs(&self, kind: SurfaceKind) -> Result<Vec<usize>> {
        let s = self.surface(kind);
        self.surface_free(kind)
            .iter()
            .map(|&i| {
                self.dof_of_vertex
                    .get(s.vertex_of_node(i))
                    .copied()
                    .flatten()
                    .ok_or_else(|| {
                        Error::Consistency(format!("surface node {i} has no free bulk counterpart"))
                    })
            })
            .collect()
    }

    /// Position of every entry of a block vector.
    pub fn block_points(&self) -> Vec<Point> {
        let mut out: Vec<Point> = self.free.iter().map(|&v| self.points[v]).collect();
        for kind in [SurfaceKind::Dynamic, SurfaceKind::Interface] {
            let s = self.surface(kind);
            out.extend(self.surface_free(kind).iter().map(|&i| s.point(i)));
        }
        out
    }

    /// `(kind, mesh vertex)` for every entry of a block vector; kinds are
    /// `bulk`, `gd` and `sigma`.
    pub fn block_labels(&self) -> Vec<(&'static str, usize)> {
        let mut out: Vec<(&'static str, usize)> = self.free.iter().map(|&v| ("bulk", v)).collect();
        out.extend(
            self.gd_free
                .iter()
                .map(|&i| ("gd", self.gd.vertex_of_node(i))),
        );
        out.extend(
            self.sigma_free
                .iter()
                .map(|&i| ("sigma", self.sigma.vertex_of_node(i))),
        );
        out
    }

    /// Prolongs free bulk values to all mesh vertices, with zeros on
    /// constrained vertices.
    pub fn prolong(&self, u: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.n_vertices];
        for (k, &v) in self.free.iter().enumerate() {
            full[v] = u[k];
        }
        full
    }

    /// Restricts a vertex vector to the free bulk dofs.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&v| full[v]).collect()
    }
}

/// Sparse 0/1 trace map from free bulk dofs to block vectors:
/// the identity stacked over the selections of free Γ_d and Σ nodes.
pub fn assemble_trace_map(dofs: &DofMap) -> Result<CsrMatrix> {
    let n = dofs.n_bulk();
    let mut b = TripletBuilder::new(dofs.n_block(), n);
    for i in 0..n {
        b.push(i, i, 1.0);
    }
    let mut row = n;
    for kind in [SurfaceKind::Dynamic, SurfaceKind::Interface] {
        for col in dofs.surface_bulk_dofs(kind)? {
            b.push(row, col, 1.0);
            row += 1;
        }
    }
    Ok(b.build())
}

/// A vector on the block space: free bulk nodes, free Γ_d nodes and free Σ nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockField {
    pub bulk: Vec<f64>,
    pub gd: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl BlockField {
    pub fn zeros(dofs: &DofMap) -> Self {
        Self {
            bulk: vec![0.0; dofs.n_bulk()],
            gd: vec![0.0; dofs.n_gd()],
            sigma: vec![0.0; dofs.n_sigma()],
        }
    }

    /// Samples independent functions on each component.
    pub fn from_fns(
        dofs: &DofMap,
        bulk: impl Fn(Point) -> f64,
        gd: impl Fn(Point) -> f64,
        sigma: impl Fn(Point) -> f64,
    ) -> Self {
        let b = dofs
            .free_vertices()
            .iter()
            .map(|&v| bulk(dofs.points[v]))
            .collect();
        let g = dofs.gd_free.iter().map(|&i| gd(dofs.gd.point(i))).collect();
        let s = dofs
            .sigma_free
            .iter()
            .map(|&i| sigma(dofs.sigma.point(i)))
            .collect();
        Self {
            bulk: b,
            gd: g,
            sigma: s,
        }
    }

    /// Same function on every component.
    pub fn from_fn(dofs: &DofMap, f: impl Fn(Point) -> f64) -> Self {
        Self::from_fns(dofs, &f, &f, &f)
    }

    pub fn from_vec(dofs: &DofMap, v: &[f64]) -> Result<Self> {
        if v.len() != dofs.n_block() {
            return Err(Error::Consistency(format!(
                "block vector has length {}, expected {}",
                v.len(),
                dofs.n_block()
            )));
        }
        let (nb, ng) = (dofs.n_bulk(), dofs.n_gd());
        Ok(Self {
            bulk: v[..nb].to_vec(),
            gd: v[nb..nb + ng].to_vec(),
            sigma: v[nb + ng..].to_vec(),
        })
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.bulk.len() + self.gd.len() + self.sigma.len());
        v.extend_from_slice(&self.bulk);
        v.extend_from_slice(&self.gd);
        v.extend_from_slice(&self.sigma);
        v
    }

    /// Checks component lengths and finiteness.
    pub fn validate(&self, dofs: &DofMap) -> Result<()> {
        if self.bulk.len() != dofs.n_bulk()
            || self.gd.len() != dofs.n_gd()
            || self.sigma.len() != dofs.n_sigma()
        {
            return Err(Error::Consistency(format!(
                "block field has component lengths ({}, {}, {}), expected ({}, {}, {})",
                self.bulk.len(),
                self.gd.len(),
                self.sigma.len(),
                dofs.n_bulk(),
                dofs.n_gd(),
                dofs.n_sigma()
            )));
        }
        if self
            .bulk
            .iter()
            .chain(&self.gd)
            .chain(&self.sigma)
            .any(|v| !v.is_finite())
        {
            return Err(Error::Consistency(
                "block field has non-finite entries".into(),
            ));
        }
        Ok(())
    }
}
