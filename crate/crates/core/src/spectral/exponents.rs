use std::fmt;

use num_rational::Ratio;
use num_traits::{Signed, Zero};

use crate::weights::BulkCase;
use crate::{Error, Result};

pub type Rational = Ratio<i64>;

/// A nonnegative rational or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtReal {
    Finite(Rational),
    PosInf,
}

impl ExtReal {
    pub fn finite(n: i64, d: i64) -> Self {
        Self::Finite(Rational::new(n, d))
    }

    /// `x / (y)₊`, with `x / 0 = +∞` for positive `x`.
    fn over_positive_part(x: Rational, y: Rational) -> Self {
        if y.is_positive() {
            Self::Finite(x / y)
        } else {
            Self::PosInf
        }
    }

    pub fn is_infinite(self) -> bool {
        self == Self::PosInf
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Self::Finite(r) => *r.numer() as f64 / *r.denom() as f64,
            Self::PosInf => f64::INFINITY,
        }
    }
}

impl fmt::Display for ExtReal {
    /// Integers print exactly, other values with at most four decimals, `+∞` as `+inf`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PosInf => f.write_str("+inf"),
            Self::Finite(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Self::Finite(_) => f.write_str(&trim_decimal(format!("{:.4}", self.to_f64()))),
        }
    }
}

fn trim_decimal(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Formats a rational like [`ExtReal`] does.
pub fn format_rational(r: Rational) -> String {
    ExtReal::Finite(r).to_string()
}

/// Where surface diffusion is present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SurfaceDiffusion {
    /// No surface diffusion that helps near the degeneration set.
    Absent,
    /// Uniformly positive surface diffusion on the dynamic boundary and the interface.
    UniformlyPositive,
    /// Positive only near where the degeneration set meets the surfaces (case B).
    PositiveNearDegeneration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scenario {
    pub case: BulkCase,
    pub surface: SurfaceDiffusion,
}

impl Scenario {
    pub fn new(case: BulkCase, surface: SurfaceDiffusion) -> Self {
        Self { case, surface }
    }
}

/// Integrability exponents of the bulk and trace embeddings, and the
/// resulting admissible exponent `r₀`.
///
/// An exponent is `None` when it plays no role in the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingReport {
    pub d: u32,
    pub gamma: Rational,
    pub scenario: Scenario,
    /// `2d / (d + γ − 2)₊`.
    pub r_omega: ExtReal,
    /// `2(d − 1) / (d − 2)₊`.
    pub r_tr: Option<ExtReal>,
    /// `2(d − 1) / (d + γ − 2)₊`.
    pub r_tr_gamma: Option<ExtReal>,
    /// `2(d − 1) / (d − 3)₊`.
    pub r_tr_star: Option<ExtReal>,
    pub r0: ExtReal,
}

pub const EXPONENT_CSV_HEADER: &str = "d,gamma,case,r_omega,r_tr,r_tr_gamma,r_tr_star,r0";

impl EmbeddingReport {
    /// Lower bound on `θ` for `dom(A^θ)` to embed into `L^∞` when the
    /// operator acts on `L^p`: `θ > r₀ / ((r₀ − 2) p)`, which is `1/p` for `r₀ = +∞`.
    pub fn theta_threshold(&self, p: Rational) -> Rational {
        match self.r0 {
            ExtReal::PosInf => p.recip(),
            ExtReal::Finite(r) => r / ((r - Rational::from_integer(2)) * p),
        }
    }

    /// One CSV row under [`EXPONENT_CSV_HEADER`]. Exponents that play no
    /// role impose no constraint and are written as `+inf`.
    pub fn csv_row(&self) -> String {
        let show = |x: Option<ExtReal>| x.unwrap_or(ExtReal::PosInf).to_string();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.d,
            format_rational(self.gamma),
            self.scenario.case,
            self.r_omega,
            show(self.r_tr),
            show(self.r_tr_gamma),
            show(self.r_tr_star),
            self.r0
        )
    }
}

/// Computes the exponent catalogue for dimension `d` and weight exponent `γ`.
///
/// `r₀` is `min(r_Ω, r_tr)` without surface diffusion in case A or the
/// nondegenerate case, `min(r_Ω, r_tr,γ)` in case B without surface
/// diffusion near the degeneration set, `min(r_Ω, r*_tr)` with uniformly
/// positive surface diffusion, and `min(r_Ω, r_tr)` in case B with surface
/// diffusion positive near the degeneration set.
pub fn embedding_exponents(d: u32, gamma: Rational, scenario: Scenario) -> Result<EmbeddingReport> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "dimension must be at least 2, got {d}"
        )));
    }
    if gamma.is_negative() {
        return Err(Error::InvalidArgument(format!(
            "weight exponent must be nonnegative, got {gamma}"
        )));
    }
    match scenario.case {
        BulkCase::Nondegenerate if !gamma.is_zero() => {
            return Err(Error::InvalidArgument(
                "the nondegenerate case requires gamma = 0".into(),
            ))
        }
        BulkCase::B if gamma >= Rational::from_integer(1) => {
            return Err(Error::OutsideTheory(format!(
                "case B requires gamma < 1, got {}",
                format_rational(gamma)
            )))
        }
        BulkCase::A | BulkCase::Nondegenerate
            if scenario.surface == SurfaceDiffusion::PositiveNearDegeneration =>
        {
            return Err(Error::UnsupportedScenario(
                "surface diffusion near the degeneration set only applies in case B".into(),
            ))
        }
        _ => {}
    }
    let dd = Rational::from_integer(i64::from(d));
    let two = Rational::from_integer(2);
    let three = Rational::from_integer(3);
    let r_omega = ExtReal::over_positive_part(two * dd, dd + gamma - two);
    let r_tr = ExtReal::over_positive_part(two * (dd - 1), dd - two);
    let r_tr_gamma = ExtReal::over_positive_part(two * (dd - 1), dd + gamma - two);
    let r_tr_star = ExtReal::over_positive_part(two * (dd - 1), dd - three);

    let case_b = scenario.case == BulkCase::B;
    let (trace, shown) = match scenario.surface {
        SurfaceDiffusion::UniformlyPositive => (r_tr_star, [true, case_b, true]),
        SurfaceDiffusion::PositiveNearDegeneration => (r_tr, [true, true, true]),
        SurfaceDiffusion::Absent if case_b => (r_tr_gamma, [false, true, false]),
        SurfaceDiffusion::Absent => (r_tr, [true, false, true]),
    };
    let pick = |show: bool, v: ExtReal| show.then_some(v);
    Ok(EmbeddingReport {
        d,
        gamma,
        scenario,
        r_omega,
        r_tr: pick(shown[0], r_tr),
        r_tr_gamma: pick(shown[1], r_tr_gamma),
        r_tr_star: pick(shown[2], r_tr_star),
        r0: r_omega.min(trace),
    })
}

/// Exact rational for a decimal like `0.5` or `2/3`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::InvalidArgument(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (sign, digits) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if (int.is_empty() && frac.is_empty())
        || !int.bytes().all(|b| b.is_ascii_digit())
        || !frac.bytes().all(|b| b.is_ascii_digit())
        || frac.len() > 12
    {
        return Err(bad());
    }
    let scale = 10i64.pow(frac.len() as u32);
    let int: i64 = if int.is_empty() {
        0
    } else {
        int.parse().map_err(|_| bad())?
    };
    let frac: i64 = if frac.is_empty() {
        0
    } else {
        frac.parse().map_err(|_| bad())?
    };
    let numer = int
        .checked_mul(scale)
        .and_then(|v| v.checked_add(frac))
        .ok_or_else(bad)?;
    Ok(Rational::new(sign * numer, scale))
}
