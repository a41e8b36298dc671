//! Structured triangulations of rectangles, used by tests, examples and
//! the command line driver.

use super::mesh::{BoundaryEdge, BoundaryLabel, Mesh, Triangle};
use crate::Point;

/// Labels for the four sides of a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SideLabels {
    pub bottom: BoundaryLabel,
    pub right: BoundaryLabel,
    pub top: BoundaryLabel,
    pub left: BoundaryLabel,
}

impl SideLabels {
    pub fn all(label: BoundaryLabel) -> Self {
        Self {
            bottom: label,
            right: label,
            top: label,
            left: label,
        }
    }

    /// Dirichlet bottom, dynamic top, Neumann sides.
    pub fn mixed() -> Self {
        Self {
            bottom: BoundaryLabel::Dirichlet,
            right: BoundaryLabel::Neumann,
            top: BoundaryLabel::Dynamic,
            left: BoundaryLabel::Neumann,
        }
    }
}

/// Rectangle `[x0, x0 + width] × [y0, y0 + height]` split into `nx × ny`
/// squares, each cut along its lower-left to upper-right diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub origin: Point,
    pub width: f64,
    pub height: f64,
    pub labels: SideLabels,
    /// Horizontal interface along grid row `row`, covering the cell
    /// columns `from..to`.
    pub interface: Option<GridInterface>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridInterface {
    pub row: usize,
    pub from: usize,
    pub to: usize,
}

impl Grid {
    pub fn unit_square(n: usize, labels: SideLabels) -> Self {
        Self {
            nx: n,
            ny: n,
            origin: Point::origin(),
            width: 1.0,
            height: 1.0,
            labels,
            interface: None,
        }
    }

    /// Interface across the full width at grid row `row`.
    pub fn with_interface(mut self, row: usize) -> Self {
        self.interface = Some(GridInterface {
            row,
            from: 0,
            to: self.nx,
        });
        self
    }

    pub fn with_partial_interface(mut self, row: usize, from: usize, to: usize) -> Self {
        self.interface = Some(GridInterface { row, from, to });
        self
    }

    pub fn build(&self) -> Mesh {
        assert!(self.nx > 0 && self.ny > 0, "grid needs at least one cell");
        let (nx, ny) = (self.nx, self.ny);
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push(Point::new(
                    self.origin.x + self.width * i as f64 / nx as f64,
                    self.origin.y + self.height * j as f64 / ny as f64,
                ));
            }
        }
        let region_of_row = |j: usize| match self.interface {
            Some(f) if j >= f.row => 1,
            _ => 0,
        };
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let region = region_of_row(j);
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                triangles.push(Triangle {
                    vertices: [a, b, c],
                    region,
                });
                triangles.push(Triangle {
                    vertices: [a, c, d],
                    region,
                });
            }
        }
        let mut boundary = Vec::with_capacity(2 * (nx + ny));
        for i in 0..nx {
            boundary.push(BoundaryEdge {
                vertices: [id(i, 0), id(i + 1, 0)],
                label: self.labels.bottom,
            });
        }
        for j in 0..ny {
            boundary.push(BoundaryEdge {
                vertices: [id(nx, j), id(nx, j + 1)],
                label: self.labels.right,
            });
        }
        for i in (0..nx).rev() {
            boundary.push(BoundaryEdge {
                vertices: [id(i + 1, ny), id(i, ny)],
                label: self.labels.top,
            });
        }
        for j in (0..ny).rev() {
            boundary.push(BoundaryEdge {
                vertices: [id(0, j + 1), id(0, j)],
                label: self.labels.left,
            });
        }
        let interface = match self.interface {
            Some(f) => {
                assert!(
                    f.row > 0 && f.row < ny && f.from < f.to && f.to <= nx,
                    "interface must be interior"
                );
                (f.from..f.to)
                    .map(|i| [id(i, f.row), id(i + 1, f.row)])
                    .collect()
            }
            None => Vec::new(),
        };
        Mesh::new(vertices, triangles, boundary, interface)
            .expect("structured grid is a valid mesh")
    }
}

/// Unit square with `n × n` cells; with `interface` set, `n` must be even
/// and the interface runs along `y = 1/2`.
pub fn unit_square(n: usize, labels: SideLabels, interface: bool) -> Mesh {
    let grid = Grid::unit_square(n, labels);
    if interface {
        assert!(
            n.is_multiple_of(2),
            "interface at y = 1/2 needs an even cell count"
        );
        grid.with_interface(n / 2).build()
    } else {
        grid.build()
    }
}
