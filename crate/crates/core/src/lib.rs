//! Exact computations with multi-scale stability conditions on the CY3
//! categories of A_n quivers: hearts and tilts, the C-action, plumbing, limits,
//! and the combinatorial boundary strata.

pub mod anquiver;
pub mod error;
pub mod hearts;
pub mod io;
pub mod klattice;
pub mod limits;
pub mod linalg;
pub mod multiscale;
pub mod number;
pub mod stability;
pub mod strata;

pub use error::{MstabError, Result};
