//! Coupled exponential family, coupled entropies and their companions.

// `!(x > 0.0)` style checks are kept so NaN falls through to the error path
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod distributions;
pub mod entropy;
pub mod error;
pub mod escort;
pub mod maxent;
pub mod quadrature;
pub mod sde;
pub mod thermo;
pub mod util;

pub use algebra::CouplingContext;
pub use distributions::{CoupledDistribution, Density, Family};
pub use error::{Error, Result};
pub use escort::DiscreteDist;
