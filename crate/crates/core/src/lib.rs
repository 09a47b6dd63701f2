//! Block-diagonal semidefinite hierarchies for stable set and 0/1 problems.

pub mod cli;
pub mod error;
pub mod graphs;
pub mod hierarchy;
pub mod linalg;
pub mod linexpr;
pub mod moment;
pub mod par;
pub mod sdpsolve;
pub mod suites;

pub use error::{Error, Result};
