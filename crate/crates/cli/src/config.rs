//! Run configuration: a flat `key = value` file with dotted keys and `#`
//! comments, then typed into [`RunConfig`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use formheat::assembly::{AssemblyOptions, CoefficientSet, MatrixField, ScalarField};
use formheat::evolution::TimeSteppingConfig;
use formheat::geometry::Submanifold;
use formheat::spectral::{parse_rational, Rational, SurfaceDiffusion};
use formheat::weights::{BulkCase, WeightSpec};
use formheat::{Matrix2, Point};

/// A configuration error tied to a key and a 1-based line (0 when the
/// key is missing from the file).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: Option<String>,
    pub line: usize,
    pub message: String,
}

impl ConfigError {
    fn at(entry: &Entry, message: impl Into<String>) -> Self {
        Self {
            key: Some(entry.key.clone()),
            line: entry.line,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.key, self.line) {
            (Some(k), 0) => write!(f, "{k}: {}", self.message),
            (Some(k), l) => write!(f, "line {l}: {k}: {}", self.message),
            (None, l) => write!(f, "line {l}: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Entries in file order; keys are unique.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawConfig {
    pub entries: Vec<Entry>,
}

impl RawConfig {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    /// Key/value echo, sorted by key.
    pub fn echo(&self) -> BTreeMap<String, String> {
        self.entries
            .iter()
            .map(|e| (e.key.clone(), e.value.clone()))
            .collect()
    }
}

fn valid_key(k: &str) -> bool {
    !k.is_empty()
        && k.split('.').all(|part| {
            !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        })
}

/// Parses the line syntax only; key names and values are checked by
/// [`RunConfig::from_raw`].
pub fn parse_str(text: &str) -> Result<RawConfig, ConfigError> {
    let mut entries: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(ConfigError {
                key: None,
                line,
                message: "expected `key = value`".into(),
            });
        };
        let key = k.trim();
        if !valid_key(key) {
            return Err(ConfigError {
                key: None,
                line,
                message: format!("malformed key {key:?}"),
            });
        }
        let mut value = v.trim();
        if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
            value = &value[1..value.len() - 1];
        }
        if value.is_empty() {
            return Err(ConfigError {
                key: Some(key.into()),
                line,
                message: "empty value".into(),
            });
        }
        if let Some(prev) = entries.iter().find(|e| e.key == key) {
            return Err(ConfigError {
                key: Some(key.into()),
                line,
                message: format!("duplicate key (first set on line {})", prev.line),
            });
        }
        entries.push(Entry {
            key: key.into(),
            value: value.into(),
            line,
        });
    }
    Ok(RawConfig { entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    Evolve,
    Eigs,
    Exponents,
    Probe,
    Scan,
}

impl Pipeline {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Evolve => "evolve",
            Self::Eigs => "eigs",
            Self::Exponents => "exponents",
            Self::Probe => "probe",
            Self::Scan => "scan",
        }
    }

    pub fn needs_mesh(self) -> bool {
        matches!(self, Self::Evolve | Self::Eigs | Self::Probe)
    }
}

/// Initial value on one block component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialValue {
    Constant(f64),
    /// `a + b x + c y`.
    Linear(f64, f64, f64),
    /// Uniform on `[0, 1)`, drawn from the run seed.
    Random,
}

impl InitialValue {
    pub fn eval(&self, x: Point) -> f64 {
        match *self {
            Self::Constant(c) => c,
            Self::Linear(a, b, c) => a + b * x.x + c * x.y,
            Self::Random => f64::NAN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialSpec {
    pub bulk: InitialValue,
    pub gd: InitialValue,
    pub sigma: InitialValue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentSpec {
    pub d: u32,
    pub gamma: Rational,
    pub case: BulkCase,
    pub surface: SurfaceDiffusion,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSpec {
    pub theta: f64,
    pub p: f64,
    /// Uniform refinements after the given mesh.
    pub refinements: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSpec {
    pub l_max: u32,
    pub window: Option<(Point, Point)>,
}

/// Typed configuration. Paths are resolved against the directory of the
/// configuration file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub pipeline: Pipeline,
    pub mesh: Option<PathBuf>,
    pub output: PathBuf,
    pub seed: u64,
    pub coefficients: CoefficientSet,
    /// Raw weight parameters, kept even when `γ` is inadmissible so that
    /// validation can report on them.
    pub weight: Option<(Submanifold, f64)>,
    pub allow_outside_theory: bool,
    pub assembly: AssemblyOptions,
    pub time: TimeSteppingConfig,
    pub initial: InitialSpec,
    pub eigs_count: usize,
    pub exponents: ExponentSpec,
    pub probe: ProbeSpec,
    pub scan: ScanSpec,
    pub raw: RawConfig,
}

/// Every accepted key apart from `coeff.bulk.region.<id>`.
pub const KEYS: &[&str] = &[
    "pipeline",
    "mesh",
    "output",
    "seed",
    "coeff.bulk",
    "coeff.weight.points",
    "coeff.weight.polyline",
    "coeff.weight.gamma",
    "coeff.weight.allow_outside_theory",
    "coeff.gd",
    "coeff.sigma",
    "coeff.zeta",
    "coeff.zeta.bulk",
    "coeff.zeta.gd",
    "coeff.zeta.sigma",
    "assembly.lumped",
    "assembly.quad_order",
    "assembly.extra_dirichlet",
    "time.theta",
    "time.dt",
    "time.t_end",
    "time.snapshots",
    "time.solver_tol",
    "time.max_iter",
    "initial.bulk",
    "initial.gd",
    "initial.sigma",
    "eigs.count",
    "exponents.d",
    "exponents.gamma",
    "exponents.case",
    "exponents.surface",
    "probe.theta",
    "probe.p",
    "probe.refinements",
    "probe.samples",
    "scan.l_max",
    "scan.window",
];

const REGION_PREFIX: &str = "coeff.bulk.region.";

fn numbers(e: &Entry, sep: impl Fn(char) -> bool) -> Result<Vec<f64>, ConfigError> {
    e.value
        .split(sep)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| ConfigError::at(e, format!("not a finite number: {s:?}")))
        })
        .collect()
}

fn number(e: &Entry) -> Result<f64, ConfigError> {
    match numbers(e, char::is_whitespace)?.as_slice() {
        [x] => Ok(*x),
        _ => Err(ConfigError::at(e, "expected a single number")),
    }
}

fn integer<T: std::str::FromStr>(e: &Entry) -> Result<T, ConfigError> {
    e.value
        .parse()
        .map_err(|_| ConfigError::at(e, format!("not a nonnegative integer: {:?}", e.value)))
}

fn boolean(e: &Entry) -> Result<bool, ConfigError> {
    match e.value.as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        v => Err(ConfigError::at(
            e,
            format!("expected true or false, got {v:?}"),
        )),
    }
}

fn matrix(e: &Entry) -> Result<Matrix2<f64>, ConfigError> {
    match numbers(e, char::is_whitespace)?.as_slice() {
        [c] => Ok(Matrix2::identity() * *c),
        [a, b, c, d] => Ok(Matrix2::new(*a, *b, *c, *d)),
        _ => Err(ConfigError::at(
            e,
            "expected one number or four row-major entries",
        )),
    }
}

fn scalar_field(e: &Entry) -> Result<ScalarField, ConfigError> {
    let mut words = e.value.split_whitespace();
    if words.next() == Some("dist_to_point") {
        let rest = Entry {
            value: words.collect::<Vec<_>>().join(" "),
            ..e.clone()
        };
        return match numbers(&rest, char::is_whitespace)?.as_slice() {
            [x, y, power] => Ok(ScalarField::DistToPoint {
                point: Point::new(*x, *y),
                power: *power,
                scale: 1.0,
            }),
            [x, y, power, scale] => Ok(ScalarField::DistToPoint {
                point: Point::new(*x, *y),
                power: *power,
                scale: *scale,
            }),
            _ => Err(ConfigError::at(
                e,
                "expected `dist_to_point x y power [scale]`",
            )),
        };
    }
    number(e).map(ScalarField::Constant)
}

fn point_list(e: &Entry) -> Result<Vec<Point>, ConfigError> {
    e.value
        .split(';')
        .map(|chunk| {
            let part = Entry {
                value: chunk.to_string(),
                ..e.clone()
            };
            match numbers(&part, char::is_whitespace)?.as_slice() {
                [x, y] => Ok(Point::new(*x, *y)),
                _ => Err(ConfigError::at(e, "expected points as `x y; x y; ...`")),
            }
        })
        .collect()
}

fn initial_value(e: &Entry) -> Result<InitialValue, ConfigError> {
    let words: Vec<&str> = e.value.split_whitespace().collect();
    match words.as_slice() {
        ["random"] => Ok(InitialValue::Random),
        ["linear", ..] => {
            let rest = Entry {
                value: words[1..].join(" "),
                ..e.clone()
            };
            match numbers(&rest, char::is_whitespace)?.as_slice() {
                [a, b, c] => Ok(InitialValue::Linear(*a, *b, *c)),
                _ => Err(ConfigError::at(e, "expected `linear a b c`")),
            }
        }
        _ => number(e).map(InitialValue::Constant),
    }
}

struct Reader<'a> {
    raw: &'a RawConfig,
}

impl<'a> Reader<'a> {
    fn get(&self, key: &str) -> Option<&'a Entry> {
        self.raw.get(key)
    }

    fn or<T>(
        &self,
        key: &str,
        default: T,
        f: impl Fn(&Entry) -> Result<T, ConfigError>,
    ) -> Result<T, ConfigError> {
        self.get(key).map_or(Ok(default), f)
    }

    fn opt<T>(
        &self,
        key: &str,
        f: impl Fn(&Entry) -> Result<T, ConfigError>,
    ) -> Result<Option<T>, ConfigError> {
        self.get(key).map(f).transpose()
    }
}

impl RunConfig {
    /// Reads and types a configuration file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|err| ConfigError {
            key: None,
            line: 0,
            message: format!("cannot read {}: {err}", path.display()),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_raw(parse_str(&text)?, base)
    }

    pub fn from_raw(raw: RawConfig, base: &Path) -> Result<Self, ConfigError> {
        for e in &raw.entries {
            let region = e.key.strip_prefix(REGION_PREFIX);
            let known = KEYS.contains(&e.key.as_str())
                || region.is_some_and(|id| id.parse::<u32>().is_ok());
            if !known {
                return Err(ConfigError::at(e, "unknown key"));
            }
        }
        let r = Reader { raw: &raw };

        let pipeline = match r.get("pipeline") {
            None => {
                return Err(ConfigError {
                    key: Some("pipeline".into()),
                    line: 0,
                    message: "missing key".into(),
                })
            }
            Some(e) => match e.value.as_str() {
                "evolve" => Pipeline::Evolve,
                "eigs" => Pipeline::Eigs,
                "exponents" => Pipeline::Exponents,
                "probe" => Pipeline::Probe,
                "scan" => Pipeline::Scan,
                v => {
                    return Err(ConfigError::at(
                        e,
                        format!(
                        "unknown pipeline {v:?}; expected evolve, eigs, exponents, probe or scan"
                    ),
                    ))
                }
            },
        };
        let mesh = r.get("mesh").map(|e| base.join(&e.value));
        if pipeline.needs_mesh() && mesh.is_none() {
            return Err(ConfigError {
                key: Some("mesh".into()),
                line: 0,
                message: format!("the {} pipeline needs a mesh", pipeline.as_str()),
            });
        }
        let output = base.join(r.get("output").map_or("out", |e| e.value.as_str()));
        let seed = r.or("seed", 0u64, integer)?;

        let default_bulk = r.or("coeff.bulk", Matrix2::identity(), matrix)?;
        let mut regions = BTreeMap::new();
        for e in &raw.entries {
            if let Some(id) = e.key.strip_prefix(REGION_PREFIX) {
                regions.insert(id.parse::<u32>().unwrap(), matrix(e)?);
            }
        }
        let bulk = if regions.is_empty() {
            MatrixField::Constant(default_bulk)
        } else {
            MatrixField::PerRegion {
                default: default_bulk,
                regions,
            }
        };

        let weight = match (r.get("coeff.weight.points"), r.get("coeff.weight.polyline")) {
            (Some(a), Some(_)) => {
                return Err(ConfigError::at(
                    a,
                    "give either points or a polyline, not both",
                ))
            }
            (None, None) => {
                if let Some(e) = r.get("coeff.weight.gamma") {
                    return Err(ConfigError::at(
                        e,
                        "a weight exponent needs coeff.weight.points or coeff.weight.polyline",
                    ));
                }
                None
            }
            (Some(e), None) => Some((e, Submanifold::points(point_list(e)?))),
            (None, Some(e)) => Some((e, Submanifold::polyline(point_list(e)?))),
        };
        let weight = match weight {
            None => None,
            Some((e, set)) => {
                let set = set.map_err(|err| ConfigError::at(e, err.to_string()))?;
                let gamma = r.or("coeff.weight.gamma", 0.0, number)?;
                if gamma < 0.0 {
                    return Err(ConfigError::at(
                        r.get("coeff.weight.gamma").unwrap(),
                        "must be nonnegative",
                    ));
                }
                Some((set, gamma))
            }
        };
        let allow_outside_theory = r.or("coeff.weight.allow_outside_theory", false, boolean)?;

        let zeta_all = r.or("coeff.zeta", ScalarField::Constant(1.0), scalar_field)?;
        let coefficients = CoefficientSet {
            bulk,
            weight: weight
                .as_ref()
                .map(|(s, g)| WeightSpec::new_unchecked(s.clone(), *g)),
            gd: r.or("coeff.gd", ScalarField::Constant(1.0), scalar_field)?,
            sigma: r.or("coeff.sigma", ScalarField::Constant(1.0), scalar_field)?,
            zeta_bulk: r.or("coeff.zeta.bulk", zeta_all.clone(), scalar_field)?,
            zeta_gd: r.or("coeff.zeta.gd", zeta_all.clone(), scalar_field)?,
            zeta_sigma: r.or("coeff.zeta.sigma", zeta_all, scalar_field)?,
        };

        let assembly = AssemblyOptions {
            lumped: r.or("assembly.lumped", false, boolean)?,
            quad_order: r.or("assembly.quad_order", 2, integer)?,
            extra_dirichlet: r.or("assembly.extra_dirichlet", Vec::new(), |e| {
                e.value
                    .split_whitespace()
                    .map(|s| {
                        integer(&Entry {
                            value: s.into(),
                            ..e.clone()
                        })
                    })
                    .collect()
            })?,
            ..Default::default()
        };

        let defaults = TimeSteppingConfig::default();
        let time = TimeSteppingConfig {
            theta: r.or("time.theta", defaults.theta, number)?,
            dt: r.or("time.dt", defaults.dt, number)?,
            t_end: r.or("time.t_end", defaults.t_end, number)?,
            solver_tol: r.or("time.solver_tol", defaults.solver_tol, number)?,
            max_iter: r.or("time.max_iter", defaults.max_iter, integer)?,
            snapshot_times: r.or("time.snapshots", Vec::new(), |e| {
                numbers(e, |c| c.is_whitespace() || c == ',')
            })?,
            ..defaults
        };

        let initial = InitialSpec {
            bulk: r.or("initial.bulk", InitialValue::Constant(1.0), initial_value)?,
            gd: r.or("initial.gd", InitialValue::Constant(1.0), initial_value)?,
            sigma: r.or("initial.sigma", InitialValue::Constant(1.0), initial_value)?,
        };

        let rational =
            |e: &Entry| parse_rational(&e.value).map_err(|err| ConfigError::at(e, err.to_string()));
        let exponents = ExponentSpec {
            d: r.or("exponents.d", 2, integer)?,
            gamma: r.or("exponents.gamma", Rational::from_integer(0), rational)?,
            case: r.or("exponents.case", BulkCase::Nondegenerate, |e| {
                match e.value.as_str() {
                    "N" | "nondegenerate" => Ok(BulkCase::Nondegenerate),
                    "A" => Ok(BulkCase::A),
                    "B" => Ok(BulkCase::B),
                    v => Err(ConfigError::at(e, format!("expected N, A or B, got {v:?}"))),
                }
            })?,
            surface: r.or("exponents.surface", SurfaceDiffusion::Absent, |e| {
                match e.value.as_str() {
                    "absent" => Ok(SurfaceDiffusion::Absent),
                    "uniform" => Ok(SurfaceDiffusion::UniformlyPositive),
                    "near" => Ok(SurfaceDiffusion::PositiveNearDegeneration),
                    v => Err(ConfigError::at(
                        e,
                        format!("expected absent, uniform or near, got {v:?}"),
                    )),
                }
            })?,
        };

        let probe = ProbeSpec {
            theta: r.or("probe.theta", 1.0, number)?,
            p: r.or("probe.p", 2.0, number)?,
            refinements: r.or("probe.refinements", 2, integer)?,
            samples: r.or("probe.samples", 20, integer)?,
        };
        let scan = ScanSpec {
            l_max: r.or("scan.l_max", 5, integer)?,
            window: r.opt("scan.window", |e| {
                match numbers(e, char::is_whitespace)?.as_slice() {
                    [x0, y0, x1, y1] => Ok((Point::new(*x0, *y0), Point::new(*x1, *y1))),
                    _ => Err(ConfigError::at(e, "expected `x0 y0 x1 y1`")),
                }
            })?,
        };
        if pipeline == Pipeline::Scan && weight.is_none() {
            return Err(ConfigError {
                key: Some("coeff.weight.points".into()),
                line: 0,
                message: "the scan pipeline needs a weight".into(),
            });
        }

        Ok(Self {
            pipeline,
            mesh,
            output,
            seed,
            coefficients,
            weight,
            allow_outside_theory,
            assembly,
            time,
            initial,
            eigs_count: r.or("eigs.count", 10, integer)?,
            exponents,
            probe,
            scan,
            raw,
        })
    }
}
