//! Exact and numeric cohomology of truncated current algebras `g[z]/z^n`
//! and of super current algebras `g[z, s]`, for `g = sl(n), gl(n)`.

pub mod cli;
pub mod error;
pub mod exactlin;
pub mod gradedbasis;
pub mod hodge;
pub mod koszul;
pub mod liealg;
pub mod macdonald;

pub use error::{Error, Result};
