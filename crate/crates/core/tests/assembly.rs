mod common;

use common::{anisotropic, FormOracle, WeightOracle, FORM_FIXTURES};
use formheat::assembly::{
    assemble_bulk_mass, assemble_surface_stiffness, AssemblyOptions, BlockField, CoefficientSet,
    DiscreteOperator, DofMap, MatrixField, ScalarField,
};
use formheat::geometry::fixtures::{unit_square, SideLabels};
use formheat::geometry::{BoundaryLabel, Submanifold, SurfaceKind, SurfaceMesh};
use formheat::weights::WeightSpec;
use formheat::{Error, Point};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

fn neumann_dynamic() -> SideLabels {
    SideLabels {
        top: BoundaryLabel::Dynamic,
        ..SideLabels::all(BoundaryLabel::Neumann)
    }
}

fn assemble(mesh: &formheat::geometry::Mesh, coeff: &CoefficientSet) -> DiscreteOperator {
    DiscreteOperator::assemble(mesh, coeff, &AssemblyOptions::default()).unwrap()
}

#[test]
fn block_norm_of_one_is_the_sum_of_measures() {
    let mesh = unit_square(8, neumann_dynamic(), true);
    let op = assemble(&mesh, &CoefficientSet::default());
    let ones = vec![1.0; op.n_dofs()];
    let expected =
        mesh.area() + mesh.boundary_length(BoundaryLabel::Dynamic) + mesh.interface_length();
    assert!((op.energy(&ones) - expected).abs() < 1e-13);
    assert!((expected - 3.0).abs() < 1e-14);
}

#[test]
fn relaxation_scales_every_mass_block() {
    let mesh = unit_square(4, SideLabels::mixed(), true);
    let one = assemble(&mesh, &CoefficientSet::default());
    let three = assemble(&mesh, &CoefficientSet::default().with_zeta(3.0));
    for (i, j, v) in one.m_blk.triplets() {
        assert!((three.m_blk.get(i, j) - 3.0 * v).abs() <= 1e-15 * v.abs());
    }
    assert_eq!(one.m_blk.nnz(), three.m_blk.nnz());
}

#[test]
fn bulk_mass_has_total_equal_to_area() {
    let mesh = unit_square(5, SideLabels::all(BoundaryLabel::Neumann), false);
    let dofs = DofMap::new(&mesh, &[]).unwrap();
    for lumped in [false, true] {
        let m = assemble_bulk_mass(&mesh, &dofs, &ScalarField::Constant(1.0), lumped);
        let total: f64 = m.row_sums().iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
    }
}

#[test]
fn scaling_the_coefficient_scales_the_stiffness() {
    let mesh = unit_square(4, SideLabels::all(BoundaryLabel::Neumann), false);
    let one = assemble(&mesh, &CoefficientSet::default());
    let two = assemble(
        &mesh,
        &CoefficientSet {
            bulk: MatrixField::scalar(2.0),
            ..Default::default()
        },
    );
    for (i, j, v) in one.t.triplets() {
        assert_eq!(two.t.get(i, j), 2.0 * v);
    }
}

#[test]
fn vanishing_surface_coefficient_matches_edgewise_oracle() {
    // the coefficient |x − M| vanishes at the midpoint M of the interface and
    // is linear on every interface edge, so the trapezoidal rule is exact
    let mesh = unit_square(8, SideLabels::all(BoundaryLabel::Neumann), true);
    let smesh = SurfaceMesh::from_mesh(&mesh, SurfaceKind::Interface).unwrap();
    let mid = p(0.5, 0.5);
    let field = ScalarField::DistToPoint {
        point: mid,
        power: 1.0,
        scale: 1.0,
    };
    let k = assemble_surface_stiffness(&smesh, &field).unwrap();
    let n = smesh.n_nodes();
    let mut oracle = vec![vec![0.0; n]; n];
    for (e, &[a, b]) in smesh.edges().iter().enumerate() {
        let [pa, pb] = smesh.edge_points(e);
        let len = (pb - pa).norm();
        let c = common::linear_edge_integral(&|x: Point| (x - mid).norm(), pa, pb) / (len * len);
        oracle[a][a] += c;
        oracle[b][b] += c;
        oracle[a][b] -= c;
        oracle[b][a] -= c;
    }
    for (i, row) in oracle.iter().enumerate() {
        let sum: f64 = (0..n).map(|j| k.get(i, j)).sum();
        assert!(sum.abs() < 1e-14);
        for (j, &o) in row.iter().enumerate() {
            assert!((k.get(i, j) - o).abs() < 1e-8, "entry ({i}, {j})");
        }
    }
}

#[test]
fn line_weight_through_triangles_matches_the_slab_oracle() {
    // S crosses a row of triangles at y = 0.3
    let mesh = unit_square(4, SideLabels::all(BoundaryLabel::Neumann), false);
    let s = Submanifold::polyline(vec![p(0.0, 0.3), p(1.0, 0.3)]).unwrap();
    let coeff = CoefficientSet {
        bulk: MatrixField::Constant(anisotropic()),
        weight: Some(WeightSpec::new(s, 0.5).unwrap()),
        ..Default::default()
    };
    let op = assemble(&mesh, &coeff);
    let zero = |_: Point| 0.0;
    let oracle = FormOracle {
        mesh: &mesh,
        a: anisotropic(),
        weight: WeightOracle::HorizontalLine(0.3, 0.5),
        mu_gd: &zero,
        mu_sigma: &zero,
    };
    let n = op.n_dofs();
    let unit = |i: usize| {
        (0..n)
            .map(|k| if k == i { 1.0 } else { 0.0 })
            .collect::<Vec<_>>()
    };
    let scale = op.t.max_abs();
    for i in 0..n {
        for j in 0..n {
            let expected = oracle.eval(&op.dofs().prolong(&unit(i)), &op.dofs().prolong(&unit(j)));
            assert!(
                (op.t.get(i, j) - expected).abs() <= 1e-6 * scale,
                "entry ({i}, {j})"
            );
        }
    }
}

#[test]
fn trace_map_selects_interface_nodes() {
    let mesh = unit_square(4, SideLabels::all(BoundaryLabel::Neumann), true);
    let op = assemble(&mesh, &CoefficientSet::default());
    let dofs = op.dofs();
    let sigma = dofs.surface(SurfaceKind::Interface);
    let offset = dofs.n_bulk() + dofs.n_gd();
    for (row, &node) in dofs.surface_free(SurfaceKind::Interface).iter().enumerate() {
        let col = dofs.dof_of_vertex(sigma.vertex_of_node(node)).unwrap();
        let entries: Vec<(usize, f64)> = op.j.row(offset + row).collect();
        assert_eq!(entries, vec![(col, 1.0)]);
    }
    // full column rank: the bulk block is the identity
    for i in 0..dofs.n_bulk() {
        assert_eq!(op.j.row(i).collect::<Vec<_>>(), vec![(i, 1.0)]);
    }
}

#[test]
fn projection_examples() {
    let mesh = unit_square(6, SideLabels::mixed(), true);
    let op = assemble(&mesh, &CoefficientSet::default());
    let dofs = op.dofs();
    let neumann_op = assemble(
        &unit_square(6, neumann_dynamic(), true),
        &CoefficientSet::default(),
    );
    let u = neumann_op
        .project_initial_data(&BlockField::from_fn(neumann_op.dofs(), |_| 1.0))
        .unwrap();
    assert!(u.iter().all(|v| (v - 1.0).abs() < 1e-12));

    let raw = BlockField::from_fns(dofs, |_| 0.0, |_| 0.0, |_| 1.0);
    let u = op.project_initial_data(&raw).unwrap();
    let mut diff = op.j.mul_vec(&u);
    diff.iter_mut().zip(raw.to_vec()).for_each(|(a, b)| *a -= b);
    let residual = op.j.transpose_mul_vec(&op.m_blk.mul_vec(&diff));
    assert!(residual.iter().all(|r| r.abs() < 1e-12), "{residual:?}");
    // the interface data pulls the bulk up near Σ, but not all the way
    let max = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(max > 0.1 && max < 1.0, "{max}");
}

#[test]
fn case_b_with_steep_weight_is_rejected() {
    let mesh = unit_square(4, SideLabels::mixed(), true);
    let coeff = CoefficientSet {
        weight: Some(
            WeightSpec::new(Submanifold::points(vec![p(0.5, 0.5)]).unwrap(), 1.5).unwrap(),
        ),
        ..Default::default()
    };
    let err = DiscreteOperator::assemble(&mesh, &coeff, &AssemblyOptions::default()).unwrap_err();
    assert!(matches!(err, Error::OutsideTheory(_)), "{err}");
    let op =
        DiscreteOperator::assemble_with(&mesh, &coeff, &AssemblyOptions::default(), true).unwrap();
    assert!(op.classification.unwrap().outside_theory);
}

#[test]
fn negative_interface_coefficient_is_an_envelope_violation() {
    let mesh = unit_square(4, SideLabels::mixed(), true);
    let coeff = CoefficientSet {
        sigma: ScalarField::Constant(-1.0),
        ..Default::default()
    };
    let err = DiscreteOperator::assemble(&mesh, &coeff, &AssemblyOptions::default()).unwrap_err();
    assert!(
        err.to_string()
            .contains("surface coefficient violates nonnegativity"),
        "{err}"
    );
}

#[test]
fn kernel_contains_constants_for_every_fixture_without_dirichlet() {
    for fixture in FORM_FIXTURES {
        let mesh = unit_square(8, neumann_dynamic(), true);
        let op = assemble(&mesh, &fixture.coefficients());
        let t1 = op.t.mul_vec(&vec![1.0; op.n_dofs()]);
        let scale = op.t.max_abs();
        assert!(
            t1.iter().all(|v| v.abs() <= 1e-12 * scale),
            "{}",
            fixture.name()
        );
    }
}

#[test]
fn symmetric_coefficients_give_symmetric_stiffness() {
    for fixture in FORM_FIXTURES {
        let op = fixture.operator(8);
        assert!(
            op.t.asymmetry() <= 1e-12 * op.t.max_abs(),
            "{}",
            fixture.name()
        );
        assert!(op.is_symmetric());
    }
}

#[test]
fn skew_coefficient_is_detected() {
    let coeff = CoefficientSet {
        bulk: MatrixField::Constant(formheat::Matrix2::new(1.0, 0.4, -0.4, 1.0)),
        ..Default::default()
    };
    let op = assemble(&unit_square(4, SideLabels::mixed(), true), &coeff);
    assert!(!op.is_symmetric());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn stiffness_is_nonnegative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for fixture in FORM_FIXTURES {
            let op = fixture.operator(8);
            for _ in 0..200 {
                let u: Vec<f64> = (0..op.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm2: f64 = u.iter().map(|x| x * x).sum();
                prop_assert!(op.t.bilinear(&u, &u) >= -1e-12 * norm2);
            }
        }
    }

    #[test]
    fn stiffness_matches_element_loop_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for fixture in FORM_FIXTURES {
            let op = fixture.operator(8);
            let mesh = op.mesh();
            let mu_sigma = fixture.mu_sigma();
            let oracle = FormOracle {
                mesh,
                a: anisotropic(),
                weight: fixture.weight_oracle(),
                mu_gd: &common::one,
                mu_sigma: &mu_sigma,
            };
            let u: Vec<f64> = (0..op.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..op.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (uf, vf) = (op.dofs().prolong(&u), op.dofs().prolong(&v));
            let scale = (oracle.eval(&uf, &uf) * oracle.eval(&vf, &vf)).sqrt();
            let got = op.t.bilinear(&v, &u);
            prop_assert!((got - oracle.eval(&uf, &vf)).abs() <= 1e-10 * scale, "{}", fixture.name());
        }
    }

    #[test]
    fn mass_is_positive_definite(seed in any::<u64>(), lumped in any::<bool>()) {
        let mesh = unit_square(4, SideLabels::mixed(), true);
        let opts = AssemblyOptions { lumped, ..Default::default() };
        let op = DiscreteOperator::assemble(&mesh, &CoefficientSet::default(), &opts).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<f64> = (0..op.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
        prop_assert!(op.energy(&u) > 0.0);
        prop_assert!(op.m_blk.asymmetry() == 0.0);
    }
}
