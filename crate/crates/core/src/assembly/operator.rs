use nalgebra::DMatrix;

use super::coefficients::{CoefficientSet, EnvelopeReport, ScalarField};
use super::dofs::{assemble_trace_map, BlockField, DofMap};
use super::forms::{
    assemble_bulk_mass, assemble_elements, assemble_surface_mass, assemble_surface_stiffness,
    bulk_element_matrix, coefficient_integrals, envelope_integrals, restrict_surface,
    surface_minimum, AssemblyOptions,
};
use crate::geometry::{Mesh, SurfaceKind};
use crate::linalg::{dot, generalized_symmetric_eig, pcg, CsrMatrix, TripletBuilder};
use crate::weights::{classify_case, BulkCase, Classification};
use crate::{Error, Point, Result};

/// Largest dof count handled by dense eigen-decompositions.
pub const DENSE_LIMIT: usize = 2000;

/// The assembled pencil: stiffness `T`, block mass `M_blk` and trace map `J`,
/// together with the Gram matrices used for norms.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    mesh: Mesh,
    dofs: DofMap,
    /// Full stiffness: bulk form plus surface forms pulled back through `J`.
    pub t: CsrMatrix,
    /// Bulk part of `t`.
    pub t_bulk: CsrMatrix,
    /// Block mass on `(bulk, Γ_d, Σ)` with the relaxation weights.
    pub m_blk: CsrMatrix,
    pub j: CsrMatrix,
    /// `Jᵀ M_blk J`.
    pub m_tilde: CsrMatrix,
    /// Gram matrix of the energy space: unweighted bulk `L²`, weighted
    /// Dirichlet term and surface Dirichlet terms.
    pub m_form: CsrMatrix,
    /// Weighted `W^{1,2}` Gram matrix: bulk `L²` plus `∫ μ* ∇u·∇v`.
    pub h1_weighted: CsrMatrix,
    /// Unweighted bulk `L²` Gram matrix.
    pub l2_bulk: CsrMatrix,
    /// Unweighted `L²(Σ)` Gram matrix of traces, on bulk dofs.
    pub l2_sigma: CsrMatrix,
    /// Unweighted `L²(Γ_d)` Gram matrix of traces, on bulk dofs.
    pub l2_gd: CsrMatrix,
    pub envelope: EnvelopeReport,
    pub classification: Option<Classification>,
    symmetric: bool,
    mass_weights: Vec<f64>,
    coefficients: CoefficientSet,
}

/// Block-diagonal matrix from square blocks.
fn block_diagonal(blocks: &[&CsrMatrix]) -> CsrMatrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut b = TripletBuilder::new(n, n);
    let mut offset = 0;
    for blk in blocks {
        for (i, j, v) in blk.triplets() {
            b.push(offset + i, offset + j, v);
        }
        offset += blk.nrows();
    }
    b.build()
}

fn sample_zeta(
    report: &mut EnvelopeReport,
    zeta: &ScalarField,
    points: impl Iterator<Item = Point>,
) {
    match zeta.as_constant() {
        Some(z) => report.sample_zeta(z),
        None => points.for_each(|x| report.sample_zeta(zeta.eval(x))),
    }
}

impl DiscreteOperator {
    /// Assembles every matrix of the pencil.
    ///
    /// A bulk weight touching the dynamic boundary or the interface with
    /// `γ ≥ 1` is rejected unless `allow_outside_theory` is set.
    pub fn assemble(mesh: &Mesh, coeff: &CoefficientSet, opts: &AssemblyOptions) -> Result<Self> {
        Self::assemble_with(mesh, coeff, opts, false)
    }

    pub fn assemble_with(
        mesh: &Mesh,
        coeff: &CoefficientSet,
        opts: &AssemblyOptions,
        allow_outside_theory: bool,
    ) -> Result<Self> {
        let classification = coeff.weight.as_ref().map(|w| classify_case(w, mesh, None));
        if let Some(c) = classification {
            if c.outside_theory && !allow_outside_theory {
                return Err(Error::OutsideTheory(format!(
                    "weight degenerates on the dynamic boundary or interface (case {}) and requires gamma < 1",
                    BulkCase::B
                )));
            }
        }
        let dofs = DofMap::new(mesh, &opts.extra_dirichlet)?;
        let j = assemble_trace_map(&dofs)?;

        let envelopes = envelope_integrals(mesh, coeff, opts)?;
        let (mus, mut envelope) = coefficient_integrals(mesh, coeff, opts, &envelopes)?;
        let t_bulk = assemble_elements(mesh, &dofs, |t, tri| bulk_element_matrix(tri, &mus[t]));
        let dirichlet_weighted = assemble_elements(mesh, &dofs, |t, tri| {
            bulk_element_matrix(tri, &(nalgebra::Matrix2::identity() * envelopes[t]))
        });

        let one = ScalarField::Constant(1.0);
        let n = dofs.n_bulk();
        let zero_bulk = CsrMatrix::zeros(n, n);
        let mut k_surf = Vec::new();
        let mut m_surf = Vec::new();
        let mut l2_surf = Vec::new();
        for (kind, mu, zeta) in [
            (SurfaceKind::Dynamic, &coeff.gd, &coeff.zeta_gd),
            (SurfaceKind::Interface, &coeff.sigma, &coeff.zeta_sigma),
        ] {
            let s = dofs.surface(kind);
            let free = dofs.surface_free(kind);
            envelope.surface_min = envelope.surface_min.min(surface_minimum(s, mu));
            k_surf.push(restrict_surface(&assemble_surface_stiffness(s, mu)?, free));
            m_surf.push(restrict_surface(
                &assemble_surface_mass(s, zeta, opts.lumped),
                free,
            ));
            l2_surf.push(restrict_surface(
                &assemble_surface_mass(s, &one, false),
                free,
            ));
            sample_zeta(&mut envelope, zeta, (0..s.n_nodes()).map(|i| s.point(i)));
        }
        sample_zeta(
            &mut envelope,
            &coeff.zeta_bulk,
            mesh.vertices().iter().copied(),
        );
        envelope.check()?;

        let m_bulk = assemble_bulk_mass(mesh, &dofs, &coeff.zeta_bulk, opts.lumped);
        let m_blk = block_diagonal(&[&m_bulk, &m_surf[0], &m_surf[1]]);
        let k_blk = block_diagonal(&[&zero_bulk, &k_surf[0], &k_surf[1]]);
        let t_surface = k_blk.congruence(&j);
        let t = t_bulk.linear_combination(1.0, &t_surface, 1.0);
        let m_tilde = m_blk.congruence(&j);

        let l2_bulk = assemble_bulk_mass(mesh, &dofs, &one, false);
        let h1_weighted = l2_bulk.linear_combination(1.0, &dirichlet_weighted, 1.0);
        let m_form = h1_weighted.linear_combination(1.0, &t_surface, 1.0);
        let zero_gd = CsrMatrix::zeros(dofs.n_gd(), dofs.n_gd());
        let zero_sigma = CsrMatrix::zeros(dofs.n_sigma(), dofs.n_sigma());
        let l2_gd = block_diagonal(&[&zero_bulk, &l2_surf[0], &zero_sigma]).congruence(&j);
        let l2_sigma = block_diagonal(&[&zero_bulk, &zero_gd, &l2_surf[1]]).congruence(&j);

        let symmetric = t.asymmetry() <= 1e-12 * t.max_abs().max(1.0);
        let mass_weights = j.transpose_mul_vec(&m_blk.row_sums());
        Ok(Self {
            mesh: mesh.clone(),
            dofs,
            t,
            t_bulk,
            m_blk,
            j,
            m_tilde,
            m_form,
            h1_weighted,
            l2_bulk,
            l2_sigma,
            l2_gd,
            envelope,
            classification,
            symmetric,
            mass_weights,
            coefficients: coeff.clone(),
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn coefficients(&self) -> &CoefficientSet {
        &self.coefficients
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.n_bulk()
    }

    /// True when `T` is symmetric to rounding.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Values of `f` at the free bulk vertices.
    pub fn interpolate(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.dofs
            .free_vertices()
            .iter()
            .map(|&v| f(self.mesh.vertex(v)))
            .collect()
    }

    /// Block vector `J u`.
    pub fn trace(&self, u: &[f64]) -> BlockField {
        BlockField::from_vec(&self.dofs, &self.j.mul_vec(u))
            .expect("trace map has block dimensions")
    }

    /// Total relaxation-weighted mass `⟨M_blk J u, 1⟩`.
    pub fn mass(&self, u: &[f64]) -> f64 {
        dot(&self.mass_weights, u)
    }

    /// Squared block norm `‖J u‖²_{M_blk}`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        self.m_tilde.bilinear(u, u)
    }

    /// `M_blk`-orthogonal projection of independent block data onto the
    /// range of `J`, returned as bulk dofs.
    pub fn project_initial_data(&self, raw: &BlockField) -> Result<Vec<f64>> {
        raw.validate(&self.dofs)?;
        let rhs = self.j.transpose_mul_vec(&self.m_blk.mul_vec(&raw.to_vec()));
        Ok(pcg(&self.m_tilde, &rhs, None, 1e-14, 10 * self.n_dofs() + 100)?.x)
    }

    /// Coercivity constant of `sym(T) + Jᵀ M_blk J` relative to the
    /// energy-space Gram matrix: the smallest `c` with
    /// `⟨(sym T + M̃) u, u⟩ ≥ c ⟨M_form u, u⟩`.
    pub fn j_ellipticity(&self) -> Result<f64> {
        let n = self.n_dofs();
        if n > DENSE_LIMIT {
            return Err(Error::Size {
                n,
                limit: DENSE_LIMIT,
            });
        }
        let a: DMatrix<f64> = self.t.symmetric_part().to_dense() + self.m_tilde.to_dense();
        let (values, _) = generalized_symmetric_eig(&a, &self.m_form.to_dense())?;
        Ok(values[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::fixtures::{unit_square, SideLabels};
    use crate::geometry::BoundaryLabel;

    fn neumann(n: usize, interface: bool) -> Mesh {
        unit_square(n, SideLabels::all(BoundaryLabel::Neumann), interface)
    }

    #[test]
    fn constants_are_in_the_kernel_without_dirichlet() {
        let mesh = unit_square(
            4,
            SideLabels {
                top: BoundaryLabel::Dynamic,
                ..SideLabels::all(BoundaryLabel::Neumann)
            },
            true,
        );
        let op = DiscreteOperator::assemble(
            &mesh,
            &CoefficientSet::default(),
            &AssemblyOptions::default(),
        )
        .unwrap();
        let ones = vec![1.0; op.n_dofs()];
        assert!(op.t.mul_vec(&ones).iter().all(|v| v.abs() < 1e-12));
        // area + top edge + interface
        assert!((op.mass(&ones) - 3.0).abs() < 1e-12);
        assert!((op.energy(&ones) - 3.0).abs() < 1e-12);
        assert!(op.is_symmetric());
    }

    #[test]
    fn projection_of_consistent_data_is_exact() {
        let op = DiscreteOperator::assemble(
            &neumann(4, true),
            &CoefficientSet::default(),
            &AssemblyOptions::default(),
        )
        .unwrap();
        let u = op.interpolate(|x| x.x * x.x + x.y);
        let got = op.project_initial_data(&op.trace(&u)).unwrap();
        assert!(got.iter().zip(&u).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn projection_residual_vanishes() {
        let op = DiscreteOperator::assemble(
            &neumann(4, true),
            &CoefficientSet::default(),
            &AssemblyOptions::default(),
        )
        .unwrap();
        let mut raw = BlockField::zeros(op.dofs());
        raw.sigma.iter_mut().for_each(|v| *v = 1.0);
        let u = op.project_initial_data(&raw).unwrap();
        let ju = op.j.mul_vec(&u);
        let diff: Vec<f64> = ju.iter().zip(raw.to_vec()).map(|(a, b)| a - b).collect();
        let res = op.j.transpose_mul_vec(&op.m_blk.mul_vec(&diff));
        assert!(res.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn j_ellipticity_is_positive() {
        let op = DiscreteOperator::assemble(
            &neumann(4, true),
            &CoefficientSet::default(),
            &AssemblyOptions::default(),
        )
        .unwrap();
        let c = op.j_ellipticity().unwrap();
        assert!(c > 0.0 && c <= 1.0 + 1e-12, "c = {c}");
    }

    #[test]
    fn negative_surface_coefficient_is_rejected() {
        let coeff = CoefficientSet {
            sigma: ScalarField::Constant(-1.0),
            ..Default::default()
        };
        let err =
            DiscreteOperator::assemble(&neumann(2, true), &coeff, &AssemblyOptions::default())
                .unwrap_err();
        assert!(err
            .to_string()
            .contains("surface coefficient violates nonnegativity"));
    }
}
