//! Pipelines behind `formheat run` and the checks behind `formheat validate`.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use formheat::assembly::{BlockField, DiscreteOperator, EnvelopeReport};
use formheat::evolution::{evolve, recover_interface_flux, snapshot_csv};
use formheat::geometry::{load_mesh, Mesh, SurfaceKind};
use formheat::spectral::{
    embedding_exponents, fractional_embedding_probe, generalized_eigs, Rational, Scenario,
    EXPONENT_CSV_HEADER,
};
use formheat::weights::{classify_case, muckenhoupt_lower_bound_scan, Classification, WeightSpec};
use formheat::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{ConfigError, InitialValue, Pipeline, RunConfig};

/// Failure of a run, split by who has to act on it.
#[derive(Debug)]
pub enum CliError {
    /// The configuration file itself.
    Config(ConfigError),
    /// Inputs the configuration points to, or values the library rejects
    /// before any computation.
    Input { key: String, message: String },
    /// The computation failed.
    Compute(formheat::Error),
    /// Writing results failed.
    Output(String),
}

impl CliError {
    /// Process exit status: 2 for bad input, including coefficients the
    /// library rejects up front, and 1 for failed computation or output.
    pub fn exit_code(&self) -> i32 {
        use formheat::Error::*;
        match self {
            Self::Config(_) | Self::Input { .. } => 2,
            Self::Compute(
                InvalidArgument(_)
                | EnvelopeViolation(_)
                | OutsideTheory(_)
                | UnsupportedScenario(_),
            ) => 2,
            Self::Compute(_) | Self::Output(_) => 1,
        }
    }

    /// One-line JSON error record.
    pub fn record(&self) -> Value {
        let (kind, key, line) = match self {
            Self::Config(e) => ("config", e.key.clone(), Some(e.line).filter(|&l| l > 0)),
            Self::Input { key, .. } => ("input", Some(key.clone()), None),
            Self::Compute(e) => (error_kind(e), None, None),
            Self::Output(_) => ("output", None, None),
        };
        json!({ "error": { "kind": kind, "key": key, "line": line, "message": self.to_string() } })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(e) => e.fmt(f),
            Self::Input { key, message } => write!(f, "{key}: {message}"),
            Self::Compute(e) => e.fmt(f),
            Self::Output(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<formheat::Error> for CliError {
    fn from(e: formheat::Error) -> Self {
        Self::Compute(e)
    }
}

fn error_kind(e: &formheat::Error) -> &'static str {
    use formheat::Error::*;
    match e {
        Parse { .. } => "parse",
        Invariant(_) => "invariant",
        IrregularPoint(_) => "irregular_point",
        OutsideChart { .. } => "outside_chart",
        DegenerateGeometry(_) => "degenerate_geometry",
        InvalidArgument(_) => "invalid_argument",
        Accuracy { .. } => "accuracy",
        EnvelopeViolation(_) => "envelope_violation",
        Consistency(_) => "consistency",
        Solver { .. } => "solver",
        Step { .. } => "step",
        Eigen { .. } => "eigen",
        OutsideTheory(_) => "outside_theory",
        UnsupportedScenario(_) => "unsupported_scenario",
        Size { .. } => "size",
        Io(_) => "io",
    }
}

fn input(key: &str, message: impl Into<String>) -> CliError {
    CliError::Input {
        key: key.into(),
        message: message.into(),
    }
}

fn read_mesh(cfg: &RunConfig) -> Result<Option<Mesh>, CliError> {
    let Some(path) = &cfg.mesh else {
        return Ok(None);
    };
    match load_mesh(path) {
        Ok(m) => Ok(Some(m)),
        Err(formheat::Error::Io(e)) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(input("mesh", "file not found"))
        }
        Err(e) => Err(input("mesh", e.to_string())),
    }
}

fn weight_spec(cfg: &RunConfig) -> Result<Option<WeightSpec>, CliError> {
    cfg.weight
        .as_ref()
        .map(|(set, gamma)| {
            WeightSpec::new(set.clone(), *gamma)
                .map_err(|e| input("coeff.weight.gamma", e.to_string()))
        })
        .transpose()
}

fn assemble(cfg: &RunConfig, mesh: &Mesh) -> Result<DiscreteOperator, CliError> {
    let mut coeff = cfg.coefficients.clone();
    coeff.weight = weight_spec(cfg)?;
    Ok(DiscreteOperator::assemble_with(
        mesh,
        &coeff,
        &cfg.assembly,
        cfg.allow_outside_theory,
    )?)
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn mesh_json(path: &Path, mesh: &Mesh) -> Value {
    let s = mesh.stats();
    json!({
        "path": path.display().to_string(),
        "vertices": s.vertices,
        "triangles": s.triangles,
        "dirichlet_edges": s.dirichlet_edges,
        "neumann_edges": s.neumann_edges,
        "dynamic_edges": s.dynamic_edges,
        "interface_edges": s.interface_edges,
        "area": s.area,
        "max_diameter": s.max_diameter,
    })
}

fn envelope_json(e: &EnvelopeReport) -> Value {
    json!({
        "c1": finite(e.c1),
        "c2": finite(e.c2),
        "zeta_min": finite(e.zeta_min),
        "zeta_max": finite(e.zeta_max),
        "surface_min": finite(e.surface_min),
    })
}

fn classification_json(c: &Option<Classification>) -> Value {
    c.map_or(Value::Null, |c| {
        json!({
            "case": c.case.as_str(),
            "outside_theory": c.outside_theory,
            "distance": finite(c.distance),
            "tolerance": c.tolerance,
        })
    })
}

fn operator_json(op: &DiscreteOperator) -> Value {
    json!({
        "dofs": op.n_dofs(),
        "symmetric": op.is_symmetric(),
        "envelope": envelope_json(&op.envelope),
        "classification": classification_json(&op.classification),
    })
}

/// Summary of a finished run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output: PathBuf,
    pub files: Vec<String>,
    pub manifest: Value,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents)
            .map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// Runs the configured pipeline, writing CSV tables and `manifest.json`
/// into the output directory.
pub fn run(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let start = Instant::now();
    let mesh = read_mesh(cfg)?;
    fs::create_dir_all(&cfg.output)
        .map_err(|e| CliError::Output(format!("cannot create {}: {e}", cfg.output.display())))?;
    let mut out = Outputs {
        dir: cfg.output.clone(),
        files: Vec::new(),
    };

    let (operator, results) = match cfg.pipeline {
        Pipeline::Evolve => evolve_pipeline(cfg, mesh.as_ref().unwrap(), &mut out)?,
        Pipeline::Eigs => eigs_pipeline(cfg, mesh.as_ref().unwrap(), &mut out)?,
        Pipeline::Probe => probe_pipeline(cfg, mesh.as_ref().unwrap(), &mut out)?,
        Pipeline::Exponents => (Value::Null, exponents_pipeline(cfg, &mut out)?),
        Pipeline::Scan => (Value::Null, scan_pipeline(cfg, mesh.as_ref(), &mut out)?),
    };

    let mut manifest = json!({
        "formheat_version": env!("CARGO_PKG_VERSION"),
        "pipeline": cfg.pipeline.as_str(),
        "seed": cfg.seed,
        "config": cfg.raw.echo(),
        "mesh": match (&cfg.mesh, &mesh) {
            (Some(p), Some(m)) => mesh_json(p, m),
            _ => Value::Null,
        },
        "operator": operator,
        "results": results,
        "threads": rayon::current_num_threads(),
        "outputs": out.files,
    });
    manifest["wall_time_s"] = json!(start.elapsed().as_secs_f64());
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    out.write("manifest.json", &(text + "\n"))?;
    Ok(RunSummary {
        output: out.dir,
        files: out.files,
        manifest,
    })
}

fn initial_field(cfg: &RunConfig, op: &DiscreteOperator) -> BlockField {
    let init = &cfg.initial;
    let mut field = BlockField::from_fns(
        op.dofs(),
        |x| init.bulk.eval(x),
        |x| init.gd.eval(x),
        |x| init.sigma.eval(x),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for (spec, values) in [
        (init.bulk, &mut field.bulk),
        (init.gd, &mut field.gd),
        (init.sigma, &mut field.sigma),
    ] {
        if spec == InitialValue::Random {
            values
                .iter_mut()
                .for_each(|v| *v = rng.random_range(0.0..1.0));
        }
    }
    field
}

fn evolve_pipeline(
    cfg: &RunConfig,
    mesh: &Mesh,
    out: &mut Outputs,
) -> Result<(Value, Value), CliError> {
    cfg.time
        .validate()
        .map_err(|e| input("time", e.to_string()))?;
    let op = assemble(cfg, mesh)?;
    let report = evolve(&op, &initial_field(cfg, &op), None, &cfg.time)?;
    out.write("monitors.csv", &report.monitors_csv())?;
    let mut snapshots = Vec::new();
    for (k, (t, u)) in report.snapshots.iter().enumerate() {
        let name = format!("snapshot_{k:03}.csv");
        out.write(&name, &snapshot_csv(&op, u))?;
        snapshots.push(json!({ "file": name, "time": t }));
    }
    out.write("final.csv", &snapshot_csv(&op, &report.final_u))?;

    let flux = recover_interface_flux(&op, &report.final_u, None)?;
    if !flux.is_empty() {
        let nodes = op.dofs().surface_bulk_dofs(SurfaceKind::Interface)?;
        let mut csv = String::from("vertex,x,y,flux_jump\n");
        for (&b, j) in nodes.iter().zip(&flux) {
            let v = op.dofs().free_vertices()[b];
            let p = mesh.vertex(v);
            writeln!(csv, "{v},{},{},{j}", p.x, p.y).unwrap();
        }
        out.write("flux.csv", &csv)?;
    }

    let last = report.n_steps();
    let results = json!({
        "steps": last,
        "initial_mass": report.mass[0],
        "final_mass": report.mass[last],
        "initial_energy": report.energy[0],
        "final_energy": report.energy[last],
        "min_value": report.minval.iter().copied().fold(f64::INFINITY, f64::min),
        "linear_iterations": report.iterations.iter().sum::<usize>(),
        "snapshots": snapshots,
    });
    Ok((operator_json(&op), results))
}

fn eigs_pipeline(
    cfg: &RunConfig,
    mesh: &Mesh,
    out: &mut Outputs,
) -> Result<(Value, Value), CliError> {
    let op = assemble(cfg, mesh)?;
    let count = cfg.eigs_count.min(op.n_dofs());
    let pairs = generalized_eigs(&op, count)?;
    let mut csv = String::from("index,value,residual\n");
    for (k, (l, r)) in pairs.values.iter().zip(&pairs.residuals).enumerate() {
        writeln!(csv, "{k},{l},{r:e}").unwrap();
    }
    out.write("eigenvalues.csv", &csv)?;
    let results = json!({
        "count": pairs.values.len(),
        "smallest": pairs.values.first().copied().map_or(Value::Null, finite),
        "max_residual": pairs.residuals.iter().copied().fold(0.0, f64::max),
    });
    Ok((operator_json(&op), results))
}

fn probe_pipeline(
    cfg: &RunConfig,
    mesh: &Mesh,
    out: &mut Outputs,
) -> Result<(Value, Value), CliError> {
    let mut meshes = vec![mesh.clone()];
    for _ in 0..cfg.probe.refinements {
        let next = meshes.last().unwrap().refine_uniform();
        meshes.push(next);
    }
    let ops = meshes
        .iter()
        .map(|m| assemble(cfg, m))
        .collect::<Result<Vec<_>, _>>()?;
    let p = &cfg.probe;
    let report = fractional_embedding_probe(&ops, p.theta, p.p, p.samples, cfg.seed)?;
    out.write("probe.csv", &report.to_csv())?;
    let results = json!({ "theta": p.theta, "p": p.p, "levels": report.rows.len(), "bounded": report.bounded });
    Ok((operator_json(&ops[0]), results))
}

fn exponents_pipeline(cfg: &RunConfig, out: &mut Outputs) -> Result<Value, CliError> {
    let e = &cfg.exponents;
    let report = embedding_exponents(e.d, e.gamma, Scenario::new(e.case, e.surface))?;
    out.write(
        "exponents.csv",
        &format!("{EXPONENT_CSV_HEADER}\n{}\n", report.csv_row()),
    )?;
    Ok(json!({
        "r0": report.r0.to_string(),
        "theta_threshold_p2": report.theta_threshold(Rational::from_integer(2)).to_string(),
    }))
}

fn scan_pipeline(
    cfg: &RunConfig,
    mesh: Option<&Mesh>,
    out: &mut Outputs,
) -> Result<Value, CliError> {
    let w = weight_spec(cfg)?.expect("scan configs carry a weight");
    let window = cfg.scan.window.unwrap_or_else(|| match mesh {
        Some(m) => bounding_box(m.vertices()),
        None => {
            let (lo, hi) = w.set().bounding_box();
            (
                Point::new(lo.x - 0.5, lo.y - 0.5),
                Point::new(hi.x + 0.5, hi.y + 0.5),
            )
        }
    });
    let scan = muckenhoupt_lower_bound_scan(&w, cfg.scan.l_max, window)?;
    out.write("scan.csv", &scan.to_csv())?;
    Ok(json!({
        "c_min": scan.c_min,
        "argmin": { "level": scan.argmin.level, "m": scan.argmin.m },
        "window": [[window.0.x, window.0.y], [window.1.x, window.1.y]],
        "window_warning": scan.window_warning,
    }))
}

fn bounding_box(points: &[Point]) -> (Point, Point) {
    points.iter().fold((points[0], points[0]), |(lo, hi), p| {
        (
            Point::new(lo.x.min(p.x), lo.y.min(p.y)),
            Point::new(hi.x.max(p.x), hi.y.max(p.y)),
        )
    })
}

/// One finding of [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(k) => write!(f, "{k}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn diag(key: &str, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        key: Some(key.into()),
        message: message.into(),
    }
}

pub const OUTSIDE_THEORY: &str = "outside theory: case B requires γ < 1";
pub const SURFACE_NEGATIVE: &str = "surface coefficient violates nonnegativity";

/// Checks a configuration without running it. Problems are returned, not
/// raised; an empty list means the run can start.
pub fn validate(cfg: &RunConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if cfg.pipeline == Pipeline::Exponents {
        let e = &cfg.exponents;
        if let Err(err) = embedding_exponents(e.d, e.gamma, Scenario::new(e.case, e.surface)) {
            out.push(match err {
                formheat::Error::OutsideTheory(_) => diag("exponents.gamma", OUTSIDE_THEORY),
                err => diag("exponents", err.to_string()),
            });
        }
        return out;
    }
    if cfg.pipeline == Pipeline::Evolve {
        if let Err(err) = cfg.time.validate() {
            out.push(diag("time", err.to_string()));
        }
    }
    let weight = match weight_spec(cfg) {
        Ok(w) => w,
        Err(CliError::Input { key, message }) => {
            out.push(diag(&key, message));
            None
        }
        Err(err) => {
            out.push(diag("coeff.weight.gamma", err.to_string()));
            None
        }
    };
    let mesh = match read_mesh(cfg) {
        Ok(m) => m,
        Err(CliError::Input { key, message }) => {
            out.push(diag(&key, message));
            None
        }
        Err(err) => {
            out.push(diag("mesh", err.to_string()));
            None
        }
    };
    let Some(mesh) = mesh else { return out };
    if let Some(w) = &weight {
        let c = classify_case(w, &mesh, None);
        if c.outside_theory && !cfg.allow_outside_theory {
            out.push(diag("coeff.weight.gamma", OUTSIDE_THEORY));
        }
    }
    if cfg.pipeline == Pipeline::Scan {
        return out;
    }
    let mut coeff = cfg.coefficients.clone();
    coeff.weight = weight;
    match DiscreteOperator::assemble_with(&mesh, &coeff, &cfg.assembly, true) {
        Ok(op) => {
            if cfg.pipeline == Pipeline::Eigs && !op.is_symmetric() {
                out.push(diag(
                    "coeff.bulk",
                    "eigenpairs need a symmetric bulk coefficient",
                ));
            }
        }
        Err(formheat::Error::EnvelopeViolation(msg)) if msg.starts_with(SURFACE_NEGATIVE) => {
            let key = if coeff.gd.as_constant().is_some_and(|c| c < 0.0) {
                "coeff.gd"
            } else {
                "coeff.sigma"
            };
            out.push(diag(key, msg));
        }
        Err(formheat::Error::EnvelopeViolation(msg)) => out.push(diag("coeff", msg)),
        Err(err) => out.push(Diagnostic {
            key: None,
            message: err.to_string(),
        }),
    }
    out
}
