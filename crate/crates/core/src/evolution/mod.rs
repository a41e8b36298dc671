//! Theta-scheme time stepping on the block space, per-step monitors and
//! recovery of the interface flux jump.

mod flux;

use std::fmt::Write as _;

pub use flux::recover_interface_flux;

use crate::assembly::{BlockField, DiscreteOperator};
use crate::linalg::{pcg, BandedLu, CsrMatrix};
use crate::{Error, Result};

/// Which monitors [`evolve`] records. Disabled monitors are stored as NaN.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Monitors {
    pub mass: bool,
    pub energy: bool,
    pub supnorm: bool,
    pub positivity: bool,
}

impl Default for Monitors {
    fn default() -> Self {
        Self {
            mass: true,
            energy: true,
            supnorm: true,
            positivity: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSteppingConfig {
    /// `θ ∈ [1/2, 1]`; 1 is implicit Euler, 1/2 the trapezoidal rule.
    pub theta: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Relative residual tolerance of the linear solver.
    pub solver_tol: f64,
    pub max_iter: usize,
    pub monitors: Monitors,
    /// Times at which the solution is kept in the report.
    pub snapshot_times: Vec<f64>,
}

impl Default for TimeSteppingConfig {
    fn default() -> Self {
        Self {
            theta: 1.0,
            dt: 1e-2,
            t_end: 0.1,
            solver_tol: 1e-12,
            max_iter: 10_000,
            monitors: Monitors::default(),
            snapshot_times: Vec::new(),
        }
    }
}

impl TimeSteppingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.5..=1.0).contains(&self.theta) {
            return Err(Error::InvalidArgument(format!(
                "theta must lie in [0.5, 1], got {}",
                self.theta
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "t_end must be nonnegative, got {}",
                self.t_end
            )));
        }
        if !(self.solver_tol > 0.0) {
            return Err(Error::InvalidArgument(
                "solver tolerance must be positive".into(),
            ));
        }
        self.n_steps().map(|_| ())
    }

    /// Number of steps; `t_end` must be an integer multiple of `dt`.
    pub fn n_steps(&self) -> Result<usize> {
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(self.dt) {
            return Err(Error::InvalidArgument(format!(
                "t_end = {} is not a multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(n as usize)
    }
}

/// Linear system `(M̃ + θ dt T) u⁺ = (M̃ − (1−θ) dt T) u + dt Jᵀ M_blk f̄`,
/// set up once for a fixed pencil and step size.
///
/// The forcing `f̄` is the source divided by the relaxation coefficient,
/// sampled at `t + θ dt`.
pub struct ThetaStepper<'a> {
    op: &'a DiscreteOperator,
    theta: f64,
    dt: f64,
    tol: f64,
    max_iter: usize,
    lhs: CsrMatrix,
    explicit: CsrMatrix,
    lu: Option<BandedLu>,
}

/// One step's result.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub u: Vec<f64>,
    /// Conjugate-gradient iterations, zero for the direct solver.
    pub iterations: usize,
}

impl<'a> ThetaStepper<'a> {
    pub fn new(op: &'a DiscreteOperator, cfg: &TimeSteppingConfig) -> Result<Self> {
        let (theta, dt) = (cfg.theta, cfg.dt);
        let lhs = op.m_tilde.linear_combination(1.0, &op.t, theta * dt);
        let explicit = op
            .m_tilde
            .linear_combination(1.0, &op.t, -(1.0 - theta) * dt);
        let lu = if op.is_symmetric() {
            None
        } else {
            Some(BandedLu::factor(&lhs)?)
        };
        Ok(Self {
            op,
            theta,
            dt,
            tol: cfg.solver_tol,
            max_iter: cfg.max_iter,
            lhs,
            explicit,
            lu,
        })
    }

    pub fn step(&self, u: &[f64], f: Option<&BlockField>) -> Result<StepOutcome> {
        let mut rhs = self.explicit.mul_vec(u);
        if let Some(f) = f {
            f.validate(self.op.dofs())?;
            let load = self
                .op
                .j
                .transpose_mul_vec(&self.op.m_blk.mul_vec(&f.to_vec()));
            rhs.iter_mut()
                .zip(load)
                .for_each(|(r, l)| *r += self.dt * l);
        }
        match &self.lu {
            None => {
                let sol = pcg(&self.lhs, &rhs, Some(u), self.tol, self.max_iter)?;
                Ok(StepOutcome {
                    u: sol.x,
                    iterations: sol.iterations,
                })
            }
            Some(lu) => Ok(StepOutcome {
                u: lu.solve(&rhs),
                iterations: 0,
            }),
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// A single theta step from `u`.
pub fn theta_step(
    op: &DiscreteOperator,
    u: &[f64],
    f: Option<&BlockField>,
    cfg: &TimeSteppingConfig,
) -> Result<StepOutcome> {
    cfg.validate()?;
    ThetaStepper::new(op, cfg)?.step(u, f)
}

/// Monitors per time level (index 0 is the projected initial state) and
/// the final state.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionReport {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    /// `‖J u‖²_{M_blk}`.
    pub energy: Vec<f64>,
    pub supnorm: Vec<f64>,
    pub minval: Vec<f64>,
    pub iterations: Vec<usize>,
    pub final_u: Vec<f64>,
    pub final_field: BlockField,
    /// `(time, bulk dofs)` at the configured snapshot times.
    pub snapshots: Vec<(f64, Vec<f64>)>,
}

impl EvolutionReport {
    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    /// Monitor table with header `step,time,mass,energy,supnorm,minval,cg_iters`.
    pub fn monitors_csv(&self) -> String {
        let mut s = String::from("step,time,mass,energy,supnorm,minval,cg_iters\n");
        for k in 0..self.times.len() {
            writeln!(
                s,
                "{k},{},{},{},{},{},{}",
                self.times[k],
                self.mass[k],
                self.energy[k],
                self.supnorm[k],
                self.minval[k],
                self.iterations[k]
            )
            .unwrap();
        }
        s
    }
}

/// Node table `node_kind,node_index,x,y,value` of the block vector `J u`.
pub fn snapshot_csv(op: &DiscreteOperator, u: &[f64]) -> String {
    let mut s = String::from("node_kind,node_index,x,y,value\n");
    let values = op.j.mul_vec(u);
    let points = op.dofs().block_points();
    for (((kind, vertex), p), v) in op.dofs().block_labels().into_iter().zip(points).zip(values) {
        writeln!(s, "{kind},{vertex},{},{},{v}", p.x, p.y).unwrap();
    }
    s
}

fn record(
    report: &mut EvolutionReport,
    op: &DiscreteOperator,
    m: &Monitors,
    t: f64,
    u: &[f64],
    iters: usize,
) {
    report.times.push(t);
    report.mass.push(if m.mass { op.mass(u) } else { f64::NAN });
    report
        .energy
        .push(if m.energy { op.energy(u) } else { f64::NAN });
    report.supnorm.push(if m.supnorm {
        u.iter().fold(0.0, |a: f64, v| a.max(v.abs()))
    } else {
        f64::NAN
    });
    report.minval.push(if m.positivity {
        u.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        f64::NAN
    });
    report.iterations.push(iters);
}

/// Projects `u0_raw` onto the range of the trace map and runs the theta
/// scheme to `t_end`. `forcing(t)` returns the source divided by the
/// relaxation coefficient on every block component.
pub fn evolve(
    op: &DiscreteOperator,
    u0_raw: &BlockField,
    forcing: Option<&dyn Fn(f64) -> BlockField>,
    cfg: &TimeSteppingConfig,
) -> Result<EvolutionReport> {
    cfg.validate()?;
    let n_steps = cfg.n_steps()?;
    let stepper = ThetaStepper::new(op, cfg)?;
    let mut u = op.project_initial_data(u0_raw)?;
    let mut report = EvolutionReport {
        times: Vec::with_capacity(n_steps + 1),
        mass: Vec::with_capacity(n_steps + 1),
        energy: Vec::with_capacity(n_steps + 1),
        supnorm: Vec::with_capacity(n_steps + 1),
        minval: Vec::with_capacity(n_steps + 1),
        iterations: Vec::with_capacity(n_steps + 1),
        final_u: Vec::new(),
        final_field: BlockField::zeros(op.dofs()),
        snapshots: Vec::new(),
    };
    let mut pending: Vec<f64> = cfg.snapshot_times.clone();
    pending.sort_by(f64::total_cmp);
    let mut take_snapshots = |t: f64, u: &[f64], report: &mut EvolutionReport| {
        while let Some(&s) = pending.first() {
            if s > t + 0.5 * cfg.dt {
                break;
            }
            report.snapshots.push((t, u.to_vec()));
            pending.remove(0);
        }
    };
    record(&mut report, op, &cfg.monitors, 0.0, &u, 0);
    take_snapshots(0.0, &u, &mut report);
    for step in 0..n_steps {
        let t = step as f64 * cfg.dt;
        let f = forcing.map(|g| g(t + cfg.theta * cfg.dt));
        let out = stepper.step(&u, f.as_ref()).map_err(|e| Error::Step {
            step,
            source: Box::new(e),
        })?;
        u = out.u;
        let t_next = (step + 1) as f64 * cfg.dt;
        record(&mut report, op, &cfg.monitors, t_next, &u, out.iterations);
        take_snapshots(t_next, &u, &mut report);
    }
    report.final_field = op.trace(&u);
    report.final_u = u;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{AssemblyOptions, CoefficientSet, MatrixField};
    use crate::geometry::fixtures::{unit_square, SideLabels};
    use crate::geometry::{BoundaryLabel, Mesh};

    fn neumann_mesh() -> Mesh {
        unit_square(
            4,
            SideLabels {
                top: BoundaryLabel::Dynamic,
                ..SideLabels::all(BoundaryLabel::Neumann)
            },
            true,
        )
    }

    #[test]
    fn config_validation() {
        let mut cfg = TimeSteppingConfig::default();
        assert_eq!(cfg.n_steps().unwrap(), 10);
        cfg.theta = 0.4;
        assert!(cfg.validate().is_err());
        cfg.theta = 0.5;
        cfg.t_end = 0.105;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn scalar_model_matches_closed_form() {
        // one free vertex: the centre of a 2x2 Dirichlet grid
        let mesh = unit_square(2, SideLabels::all(BoundaryLabel::Dirichlet), false);
        for lumped in [false, true] {
            let op = DiscreteOperator::assemble(
                &mesh,
                &CoefficientSet::default(),
                &AssemblyOptions {
                    lumped,
                    ..Default::default()
                },
            )
            .unwrap();
            assert_eq!(op.n_dofs(), 1);
            let a = op.t.get(0, 0);
            let m = op.m_tilde.get(0, 0);
            let dt = 0.1;
            for theta in [1.0, 0.5] {
                let cfg = TimeSteppingConfig {
                    theta,
                    dt,
                    ..Default::default()
                };
                let got = theta_step(&op, &[1.0], None, &cfg).unwrap().u[0];
                let expected = (1.0 - (1.0 - theta) * dt * a / m) / (1.0 + theta * dt * a / m);
                assert!((got - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn constants_are_stationary() {
        let op = DiscreteOperator::assemble(
            &neumann_mesh(),
            &CoefficientSet::default(),
            &AssemblyOptions::default(),
        )
        .unwrap();
        let cfg = TimeSteppingConfig::default();
        let rep = evolve(&op, &BlockField::from_fn(op.dofs(), |_| 1.0), None, &cfg).unwrap();
        assert_eq!(rep.n_steps(), 10);
        assert!(rep.final_u.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(rep.mass.iter().all(|m| (m - rep.mass[0]).abs() < 1e-12));
        assert_eq!(rep.monitors_csv().lines().count(), 12);
    }

    #[test]
    fn nonsymmetric_pencil_uses_direct_solver() {
        let coeff = CoefficientSet {
            bulk: MatrixField::Constant(nalgebra::Matrix2::new(1.0, 0.5, -0.5, 1.0)),
            ..Default::default()
        };
        let op = DiscreteOperator::assemble(&neumann_mesh(), &coeff, &AssemblyOptions::default())
            .unwrap();
        assert!(!op.is_symmetric());
        let u0 = BlockField::from_fn(op.dofs(), |x| x.x);
        let rep = evolve(&op, &u0, None, &TimeSteppingConfig::default()).unwrap();
        assert!(rep.iterations.iter().all(|&i| i == 0));
        for w in rep.energy.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        assert!((rep.mass[10] - rep.mass[0]).abs() < 1e-12);
    }

    #[test]
    fn snapshots_are_taken_at_requested_times() {
        let op = DiscreteOperator::assemble(
            &neumann_mesh(),
            &CoefficientSet::default(),
            &AssemblyOptions::default(),
        )
        .unwrap();
        let cfg = TimeSteppingConfig {
            snapshot_times: vec![0.05, 0.0],
            ..Default::default()
        };
        let rep = evolve(&op, &BlockField::from_fn(op.dofs(), |x| x.y), None, &cfg).unwrap();
        let times: Vec<f64> = rep.snapshots.iter().map(|s| s.0).collect();
        assert_eq!(times.len(), 2);
        assert_eq!(times[0], 0.0);
        assert!((times[1] - 0.05).abs() < 1e-12);
        let csv = snapshot_csv(&op, &rep.final_u);
        assert!(csv.starts_with("node_kind,node_index,x,y,value\n"));
        assert_eq!(csv.lines().count(), 1 + op.dofs().n_block());
    }
}
