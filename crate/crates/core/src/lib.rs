//! Compatibility-based P-values for point, interval and nonequivalence
//! hypotheses, the divergence geometry of canonical GLMs, and the supporting
//! simulation tools.

pub mod compat;
pub mod divergence;
pub mod error;
pub mod glmgeom;
pub mod hypotest;
pub mod registry;
pub mod serde_ext;
pub mod simlab;
pub mod statdist;

mod linalg;

pub use error::{Error, Result};
pub use nalgebra;
pub use registry::{Named, Registry};
