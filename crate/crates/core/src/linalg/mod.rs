//! Sparse storage and the linear solvers used by the time stepper and the
//! eigensolvers.

mod banded;
mod cg;
mod csr;
mod dense;

pub use banded::{reverse_cuthill_mckee, BandedLu};
pub use cg::{pcg, CgSolution};
pub use csr::{dot, norm2, CsrMatrix, TripletBuilder};
pub use dense::generalized_symmetric_eig;
