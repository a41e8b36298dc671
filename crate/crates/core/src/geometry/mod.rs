//! Meshes with labeled boundary and interface curves, surface chains and
//! their Lipschitz graph charts, and distances to lower-dimensional sets.

mod chart;
mod distance;
pub mod fixtures;
mod mesh;
mod surface;

pub use chart::{chart_metric, Metric, SurfaceChart};
pub use distance::{
    distance_to_submanifold, point_segment_distance, segment_segment_distance, Primitive,
    Submanifold,
};
pub use mesh::{BoundaryEdge, BoundaryLabel, Mesh, MeshStats, Triangle};
pub use surface::{surface_gradient_p1, Chain, ChartPatch, SurfaceKind, SurfaceMesh};

/// Loads a mesh file; see [`Mesh::parse_str`] for the format.
pub fn load_mesh(path: impl AsRef<std::path::Path>) -> crate::Result<Mesh> {
    Mesh::load(path)
}
