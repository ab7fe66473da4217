//! Densities of stable processes and subordinator hitting times, computed
//! by three independent routes — convergent series with index duality,
//! Grünwald finite differences, and exact-draw particle tracking — plus
//! subordination solvers for time-fractional Cauchy problems.

pub mod density;
pub mod error;
pub mod fpde;
pub mod inverse;
pub mod mc;
pub mod params;
pub mod quadrature;
pub mod subordination;

pub use error::{Error, Result};
