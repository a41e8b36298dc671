//! Eigenpairs of the discrete pencil, numerical-range checks, fractional
//! powers, and the catalogue of embedding exponents with a numerical probe.

mod calculus;
mod eigs;
mod exponents;

pub use calculus::{
    fractional_embedding_probe, fractional_power_apply, numerical_range_check, trace_norm_ratio,
    FractionalPowers, NumericalRange, ProbeReport, ProbeRow, PROBE_GROWTH,
};
pub use eigs::{dense_eigs, generalized_eigs, iterative_eigs, Eigenpairs, EIGEN_RESIDUAL_TOL};
pub use exponents::{
    embedding_exponents, format_rational, parse_rational, EmbeddingReport, ExtReal, Rational,
    Scenario, SurfaceDiffusion, EXPONENT_CSV_HEADER,
};
