//! P1 realization of the energy form: coefficients, degrees of freedom,
//! stiffness and mass matrices, the trace map and the assembled pencil.

mod coefficients;
mod dofs;
mod forms;
mod operator;

pub use coefficients::{CoefficientSet, EnvelopeReport, MatrixField, ScalarField};
pub use dofs::{assemble_trace_map, BlockField, DofMap};
pub use forms::{
    assemble_bulk_mass, assemble_bulk_stiffness, assemble_surface_mass, assemble_surface_stiffness,
    barycentric_gradients, bulk_element_matrix, edge_integral, envelope_integrals, AssemblyOptions,
};
pub use operator::{DiscreteOperator, DENSE_LIMIT};
