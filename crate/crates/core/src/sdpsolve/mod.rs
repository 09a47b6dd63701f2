//! Block-diagonal SDP model and the embedded interior-point solver.

mod ipm;
mod model;
mod sdpa;
mod verify;

pub use model::{Block, BlockKind, BlockSdp, SparseSym};
pub use sdpa::{export_sdpa, import_sdpa};
pub use ipm::{
    dual_objective, dual_residual, relative_gap, slack_matrices, solve, BlockMatrix, IterationLog, SolveOptions, SolveResult,
    SolveStatus,
};
pub use verify::{verify_solution, Check, VerifyReport};
