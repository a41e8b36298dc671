//! Element and global matrices of the bulk and surface forms.

use nalgebra::{Matrix2, Matrix3, Vector2};
use rayon::prelude::*;

use super::coefficients::{CoefficientSet, EnvelopeReport, ScalarField};
use super::dofs::DofMap;
use crate::geometry::{Mesh, SurfaceMesh};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::quadrature::{triangle_area, IntervalRule, TriangleRule};
use crate::weights::{segment_power_integral, weighted_polygon_integral, QuadOptions};
use crate::{Error, Point, Result};

/// Options shared by all assembly routines.
#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyOptions {
    /// Row-sum lumping of every mass block.
    pub lumped: bool,
    /// Points per direction of the Gauss rule for non-constant coefficients.
    pub quad_order: usize,
    /// Controls the weighted quadrature near the degeneration set.
    pub weight_quad: QuadOptions,
    /// Surface endpoints held at zero in addition to the closed Dirichlet boundary.
    pub extra_dirichlet: Vec<usize>,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            lumped: false,
            quad_order: 2,
            weight_quad: QuadOptions::default(),
            extra_dirichlet: Vec::new(),
        }
    }
}

/// Gradients of the barycentric coordinates of a triangle.
pub fn barycentric_gradients(tri: &[Point; 3]) -> [Vector2<f64>; 3] {
    let two_area = 2.0 * triangle_area(tri);
    let perp = |v: Vector2<f64>| Vector2::new(-v.y, v.x);
    [0, 1, 2].map(|i| perp(tri[(i + 2) % 3] - tri[(i + 1) % 3]) / two_area)
}

/// P1 element stiffness `K_ij = ∇λ_iᵀ M ∇λ_j` for the integrated
/// coefficient `M = ∫_T μ dx`.
pub fn bulk_element_matrix(tri: &[Point; 3], mu_integral: &Matrix2<f64>) -> Matrix3<f64> {
    let g = barycentric_gradients(tri);
    Matrix3::from_fn(|i, j| g[i].dot(&(mu_integral * g[j])))
}

/// Consistent P1 mass on a triangle scaled by `ζ`, `ζ |T|/12 (1 + δ_ij)`.
fn triangle_mass(area: f64) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| if i == j { area / 6.0 } else { area / 12.0 })
}

/// `∫_T μ*(x) dx` for every triangle (the area when there is no weight).
pub fn envelope_integrals(
    mesh: &Mesh,
    coeff: &CoefficientSet,
    opts: &AssemblyOptions,
) -> Result<Vec<f64>> {
    (0..mesh.triangles().len())
        .into_par_iter()
        .map(|t| {
            let tri = mesh.triangle_points(t);
            match &coeff.weight {
                None => Ok(triangle_area(&tri)),
                Some(w) => Ok(weighted_polygon_integral(w, &tri, &opts.weight_quad)?.value),
            }
        })
        .collect()
}

/// `∫_T μ dx` per triangle and the sampled envelope constants.
pub(crate) fn coefficient_integrals(
    mesh: &Mesh,
    coeff: &CoefficientSet,
    opts: &AssemblyOptions,
    envelopes: &[f64],
) -> Result<(Vec<Matrix2<f64>>, EnvelopeReport)> {
    let rule = TriangleRule::new(opts.quad_order.max(1));
    let mut report = EnvelopeReport::new();
    let mut out = Vec::with_capacity(mesh.triangles().len());
    for (t, tri_data) in mesh.triangles().iter().enumerate() {
        let tri = mesh.triangle_points(t);
        let m = match coeff.bulk.region_value(tri_data.region) {
            Some(a) => {
                report.sample_bulk(&a);
                a * envelopes[t]
            }
            None => {
                if coeff.weight.is_some() {
                    return Err(Error::InvalidArgument(
                        "a weighted bulk coefficient needs a matrix that is constant on each region".into(),
                    ));
                }
                let mut acc = Matrix2::zeros();
                for (x, w) in rule.points(&tri) {
                    let a = coeff.bulk.eval(x, tri_data.region);
                    report.sample_bulk(&a);
                    acc += a * w;
                }
                acc
            }
        };
        out.push(m);
    }
    Ok((out, report))
}

/// Bulk stiffness on the free dofs, with the observed envelope constants.
pub fn assemble_bulk_stiffness(
    mesh: &Mesh,
    dofs: &DofMap,
    coeff: &CoefficientSet,
    opts: &AssemblyOptions,
) -> Result<(CsrMatrix, EnvelopeReport)> {
    let envelopes = envelope_integrals(mesh, coeff, opts)?;
    let (mus, report) = coefficient_integrals(mesh, coeff, opts, &envelopes)?;
    let t = assemble_elements(mesh, dofs, |t, tri| bulk_element_matrix(tri, &mus[t]));
    Ok((t, report))
}

/// Assembles a P1 bilinear form from element matrices, keeping free dofs only.
pub(crate) fn assemble_elements(
    mesh: &Mesh,
    dofs: &DofMap,
    element: impl Fn(usize, &[Point; 3]) -> Matrix3<f64>,
) -> CsrMatrix {
    let n = dofs.n_bulk();
    let mut b = TripletBuilder::new(n, n);
    for (t, tri_data) in mesh.triangles().iter().enumerate() {
        let tri = mesh.triangle_points(t);
        let k = element(t, &tri);
        let local = tri_data.vertices.map(|v| dofs.dof_of_vertex(v));
        for i in 0..3 {
            let Some(gi) = local[i] else { continue };
            for j in 0..3 {
                if let Some(gj) = local[j] {
                    b.push(gi, gj, k[(i, j)]);
                }
            }
        }
    }
    b.build()
}

/// Bulk mass `∫ ζ φ_i φ_j` on the free dofs.
pub fn assemble_bulk_mass(
    mesh: &Mesh,
    dofs: &DofMap,
    zeta: &ScalarField,
    lumped: bool,
) -> CsrMatrix {
    let rule = TriangleRule::new(3);
    let m = assemble_elements(mesh, dofs, |_, tri| {
        let area = triangle_area(tri);
        match zeta.as_constant() {
            Some(z) => triangle_mass(area) * z,
            None => {
                let mut k = Matrix3::zeros();
                for (l, w) in rule.barycentric() {
                    let x = Point::from(
                        tri[0].coords * l[0] + tri[1].coords * l[1] + tri[2].coords * l[2],
                    );
                    let z = zeta.eval(x);
                    for i in 0..3 {
                        for j in 0..3 {
                            k[(i, j)] += w * area * z * l[i] * l[j];
                        }
                    }
                }
                k
            }
        }
    });
    if lumped {
        CsrMatrix::from_diagonal(&m.row_sums())
    } else {
        m
    }
}

/// `∫_e f ds` along a segment.
pub fn edge_integral(field: &ScalarField, a: Point, b: Point) -> f64 {
    let len = (b - a).norm();
    match field {
        ScalarField::Constant(c) => c * len,
        ScalarField::DistToPoint {
            point,
            power,
            scale,
        } => scale * segment_power_integral(a, b, *point, *power),
        ScalarField::Function(f) => {
            let rule = IntervalRule::new(8);
            rule.integrate(0.0, 1.0, |s| f(a + (b - a) * s)) * len
        }
    }
}

/// Samples used to check the sign of a surface coefficient on an edge.
fn edge_samples(field: &ScalarField, a: Point, b: Point) -> f64 {
    let rule = IntervalRule::new(4);
    let mut m = field.eval(a).min(field.eval(b));
    for (s, _) in rule.unit() {
        m = m.min(field.eval(a + (b - a) * s));
    }
    m
}

/// Surface stiffness on all nodes of a surface: `(μ̄_e / L_e) [[1, -1], [-1, 1]]`
/// per edge with `μ̄_e` the edge average of the tangential coefficient.
pub fn assemble_surface_stiffness(smesh: &SurfaceMesh, mu: &ScalarField) -> Result<CsrMatrix> {
    let n = smesh.n_nodes();
    let mut b = TripletBuilder::new(n, n);
    for (e, &[i, j]) in smesh.edges().iter().enumerate() {
        let [a, c] = smesh.edge_points(e);
        let min = edge_samples(mu, a, c);
        if min < 0.0 || min.is_nan() {
            return Err(Error::EnvelopeViolation(format!(
                "surface coefficient violates nonnegativity on edge {e} (sample {min:e})"
            )));
        }
        let len = smesh.edge_length(e);
        let k = edge_integral(mu, a, c) / (len * len);
        if k == 0.0 {
            continue;
        }
        b.push(i, i, k);
        b.push(j, j, k);
        b.push(i, j, -k);
        b.push(j, i, -k);
    }
    Ok(b.build())
}

/// Surface mass `∫ ζ ψ_i ψ_j ds` on all nodes of a surface.
pub fn assemble_surface_mass(smesh: &SurfaceMesh, zeta: &ScalarField, lumped: bool) -> CsrMatrix {
    let n = smesh.n_nodes();
    let rule = IntervalRule::new(3);
    let mut b = TripletBuilder::new(n, n);
    for (e, &[i, j]) in smesh.edges().iter().enumerate() {
        let [a, c] = smesh.edge_points(e);
        let len = smesh.edge_length(e);
        let (mut m_ii, mut m_ij, mut m_jj) = (0.0, 0.0, 0.0);
        match zeta.as_constant() {
            Some(z) => {
                m_ii = z * len / 3.0;
                m_jj = m_ii;
                m_ij = z * len / 6.0;
            }
            None => {
                for (s, w) in rule.unit() {
                    let z = zeta.eval(a + (c - a) * s) * w * len;
                    m_ii += z * (1.0 - s) * (1.0 - s);
                    m_ij += z * (1.0 - s) * s;
                    m_jj += z * s * s;
                }
            }
        }
        if lumped {
            b.push(i, i, m_ii + m_ij);
            b.push(j, j, m_jj + m_ij);
        } else {
            b.push(i, i, m_ii);
            b.push(j, j, m_jj);
            b.push(i, j, m_ij);
            b.push(j, i, m_ij);
        }
    }
    b.build()
}

/// Restricts a matrix on all nodes of a surface to its free nodes.
pub(crate) fn restrict_surface(full: &CsrMatrix, free: &[usize]) -> CsrMatrix {
    let mut position = vec![None; full.nrows()];
    for (k, &i) in free.iter().enumerate() {
        position[i] = Some(k);
    }
    let mut b = TripletBuilder::new(free.len(), free.len());
    for (i, j, v) in full.triplets() {
        if let (Some(pi), Some(pj)) = (position[i], position[j]) {
            b.push(pi, pj, v);
        }
    }
    b.build()
}

/// Smallest sampled value of a surface coefficient on a surface (`+∞` if empty).
pub(crate) fn surface_minimum(smesh: &SurfaceMesh, mu: &ScalarField) -> f64 {
    (0..smesh.edges().len())
        .map(|e| {
            let [a, b] = smesh.edge_points(e);
            edge_samples(mu, a, b)
        })
        .fold(f64::INFINITY, f64::min)
}
