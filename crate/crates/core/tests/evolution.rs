use formheat::assembly::{
    AssemblyOptions, BlockField, CoefficientSet, DiscreteOperator, MatrixField,
};
use formheat::evolution::{
    evolve, recover_interface_flux, snapshot_csv, theta_step, TimeSteppingConfig,
};
use formheat::geometry::fixtures::{unit_square, Grid, SideLabels};
use formheat::geometry::BoundaryLabel;
use formheat::spectral::dense_eigs;
use formheat::{Matrix2, Point};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn neumann_dynamic() -> SideLabels {
    SideLabels {
        top: BoundaryLabel::Dynamic,
        ..SideLabels::all(BoundaryLabel::Neumann)
    }
}

fn operator(n: usize, labels: SideLabels, coeff: CoefficientSet, lumped: bool) -> DiscreteOperator {
    let opts = AssemblyOptions {
        lumped,
        ..Default::default()
    };
    DiscreteOperator::assemble(&unit_square(n, labels, true), &coeff, &opts).unwrap()
}

fn config(theta: f64, dt: f64, steps: usize) -> TimeSteppingConfig {
    TimeSteppingConfig {
        theta,
        dt,
        t_end: dt * steps as f64,
        ..Default::default()
    }
}

fn random_field(op: &DiscreteOperator, rng: &mut ChaCha8Rng) -> BlockField {
    let mut f = BlockField::zeros(op.dofs());
    for v in f
        .bulk
        .iter_mut()
        .chain(f.gd.iter_mut())
        .chain(f.sigma.iter_mut())
    {
        *v = rng.random_range(0.0..1.0);
    }
    f
}

#[test]
fn single_dof_matches_the_scalar_model() {
    // the all-Dirichlet square with 2 × 2 cells leaves only the centre free
    let zeta = 2.0;
    let op = operator(
        2,
        SideLabels::all(BoundaryLabel::Dirichlet),
        CoefficientSet::default().with_zeta(zeta),
        false,
    );
    assert_eq!(op.n_dofs(), 1);
    // ratio a/ζ of stiffness to mass, as in ζ u' + a u = 0
    let rate = op.t.get(0, 0) / op.m_tilde.get(0, 0);
    let dt = 0.1;
    let implicit = theta_step(&op, &[1.0], None, &config(1.0, dt, 1))
        .unwrap()
        .u[0];
    assert!((implicit - 1.0 / (1.0 + dt * rate)).abs() < 1e-14);
    let trapezoid = theta_step(&op, &[1.0], None, &config(0.5, dt, 1))
        .unwrap()
        .u[0];
    assert!((trapezoid - (1.0 - 0.5 * dt * rate) / (1.0 + 0.5 * dt * rate)).abs() < 1e-14);
}

#[test]
fn constants_are_fixed_points_without_dirichlet() {
    let op = operator(4, neumann_dynamic(), CoefficientSet::default(), false);
    let u = vec![2.5; op.n_dofs()];
    for theta in [0.5, 1.0] {
        let out = theta_step(&op, &u, None, &config(theta, 0.1, 1)).unwrap();
        assert!(out.u.iter().all(|v| (v - 2.5).abs() < 1e-13));
    }
}

#[test]
fn equilibrium_keeps_every_monitor_constant() {
    let op = operator(
        8,
        neumann_dynamic(),
        CoefficientSet::default().with_zeta(0.7),
        false,
    );
    let report = evolve(
        &op,
        &BlockField::from_fn(op.dofs(), |_| 1.0),
        None,
        &config(1.0, 0.01, 20),
    )
    .unwrap();
    assert_eq!(report.n_steps(), 20);
    for series in [
        &report.mass,
        &report.energy,
        &report.supnorm,
        &report.minval,
    ] {
        assert!(
            series
                .iter()
                .all(|v| (v - series[0]).abs() < 1e-12 * series[0]),
            "{series:?}"
        );
    }
    assert!(report.final_u.iter().all(|v| (v - 1.0).abs() < 1e-12));
    let csv = report.monitors_csv();
    assert_eq!(
        csv.lines().next(),
        Some("step,time,mass,energy,supnorm,minval,cg_iters")
    );
    assert_eq!(csv.lines().count(), 22);
}

#[test]
fn snapshot_table_lists_every_block_entry() {
    let op = operator(4, SideLabels::mixed(), CoefficientSet::default(), false);
    let u = op.interpolate(|x| x.x + x.y);
    let csv = snapshot_csv(&op, &u);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("node_kind,node_index,x,y,value"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), op.dofs().n_block());
    for r in &rows {
        let (x, y, v): (f64, f64, f64) = (
            r[2].parse().unwrap(),
            r[3].parse().unwrap(),
            r[4].parse().unwrap(),
        );
        assert!((v - (x + y)).abs() < 1e-14);
        assert!(["bulk", "gd", "sigma"].contains(&r[0]));
    }
}

/// Exact semi-discrete solution `Σ e^{−λ t} ⟨v, M̃ u₀⟩ v` from the full
/// eigendecomposition of the pencil.
fn semi_discrete(op: &DiscreteOperator, u0: &[f64], t: f64) -> Vec<f64> {
    let pairs = dense_eigs(op, op.n_dofs()).unwrap();
    let mu0 = op.m_tilde.mul_vec(u0);
    let mut out = vec![0.0; u0.len()];
    for (lambda, v) in pairs.values.iter().zip(&pairs.vectors) {
        let c = v.iter().zip(&mu0).map(|(a, b)| a * b).sum::<f64>() * (-lambda * t).exp();
        out.iter_mut().zip(v).for_each(|(o, vi)| *o += c * vi);
    }
    out
}

#[test]
fn time_discretization_has_the_expected_order() {
    let op = operator(6, SideLabels::mixed(), CoefficientSet::default(), false);
    let u0 = op.interpolate(|x| (std::f64::consts::PI * x.x).cos() * x.y * (2.0 - x.y));
    let exact = semi_discrete(&op, &u0, 0.5);
    for (theta, order) in [(1.0, 1.0), (0.5, 2.0)] {
        let errors: Vec<f64> = [40usize, 80, 160]
            .iter()
            .map(|&steps| {
                let report = evolve(
                    &op,
                    &op.trace(&u0),
                    None,
                    &config(theta, 0.5 / steps as f64, steps),
                )
                .unwrap();
                let diff: Vec<f64> = report
                    .final_u
                    .iter()
                    .zip(&exact)
                    .map(|(a, b)| a - b)
                    .collect();
                op.energy(&diff).sqrt()
            })
            .collect();
        for pair in errors.windows(2) {
            let rate = (pair[0] / pair[1]).log2();
            assert!(
                (rate - order).abs() < 0.15,
                "theta {theta}: errors {errors:?}"
            );
        }
    }
}

#[test]
fn tent_flux_is_two_at_interior_nodes() {
    let labels = SideLabels {
        bottom: BoundaryLabel::Dirichlet,
        top: BoundaryLabel::Dirichlet,
        ..SideLabels::all(BoundaryLabel::Neumann)
    };
    let op = operator(8, labels, CoefficientSet::default(), false);
    let u = op.interpolate(|x| x.y.min(1.0 - x.y));
    let jump = recover_interface_flux(&op, &u, None).unwrap();
    assert_eq!(jump.len(), 9);
    assert!(jump.iter().all(|j| (j - 2.0).abs() < 1e-10), "{jump:?}");
}

#[test]
fn smooth_state_has_vanishing_flux_jump() {
    // u = cos(πx) + y² has zero normal derivative on the sides, −Δu = π² cos(πx) − 2
    let pi = std::f64::consts::PI;
    let u_exact = |x: Point| (pi * x.x).cos() + x.y * x.y;
    let source = |x: Point| pi * pi * (pi * x.x).cos() - 2.0;
    let mut worst = Vec::new();
    for n in [8usize, 16, 32] {
        let op = operator(
            n,
            SideLabels::all(BoundaryLabel::Neumann),
            CoefficientSet::default(),
            false,
        );
        let u = op.interpolate(u_exact);
        let f = BlockField::from_fn(op.dofs(), source);
        let jump = recover_interface_flux(&op, &u, Some(&f)).unwrap();
        worst.push(jump.iter().fold(0.0f64, |m, j| m.max(j.abs())));
    }
    for (k, w) in worst.iter().enumerate() {
        let h = 1.0 / (8 << k) as f64;
        assert!(*w <= 2.0 * h, "{worst:?}");
    }
    assert!(worst[2] < worst[0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn implicit_euler_dissipates_energy(seed in any::<u64>(), skew in 0.0f64..0.8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeff = CoefficientSet { bulk: MatrixField::Constant(Matrix2::new(1.0, skew, -skew, 1.0)), ..Default::default() };
        let op = operator(6, SideLabels::mixed(), coeff, false);
        let report = evolve(&op, &random_field(&op, &mut rng), None, &config(1.0, 0.02, 30)).unwrap();
        for pair in report.energy.windows(2) {
            prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn mass_is_conserved_without_dirichlet(seed in any::<u64>(), theta in 0.5f64..=1.0, lumped in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let op = operator(6, neumann_dynamic(), CoefficientSet::default().with_zeta(1.3), lumped);
        let report = evolve(&op, &random_field(&op, &mut rng), None, &config(theta, 0.01, 40)).unwrap();
        let m0 = report.mass[0];
        prop_assert!(report.mass.iter().all(|m| (m - m0).abs() <= 1e-10 * m0.abs()));
    }

    #[test]
    fn lumped_implicit_euler_obeys_the_maximum_principle(seed in any::<u64>(), diffusion in 0.1f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mesh = Grid::unit_square(6, neumann_dynamic()).with_interface(3).build();
        prop_assert!(mesh.is_non_obtuse());
        let coeff = CoefficientSet { bulk: MatrixField::scalar(diffusion), ..Default::default() };
        let opts = AssemblyOptions { lumped: true, ..Default::default() };
        let op = DiscreteOperator::assemble(&mesh, &coeff, &opts).unwrap();
        let cfg = config(1.0, 0.005, 1);
        let mut u = op.project_initial_data(&random_field(&op, &mut rng)).unwrap();
        for _ in 0..20 {
            let next = theta_step(&op, &u, None, &cfg).unwrap().u;
            let (lo, hi) = (u.iter().copied().fold(f64::INFINITY, f64::min), u.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            prop_assert!(next.iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
            u = next;
        }
    }
}
