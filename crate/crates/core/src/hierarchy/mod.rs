//! Relaxation builders for 0/1 programs and stable sets.

mod builders;
mod cone;
pub mod presolve;
mod stats;

pub use builders::*;
pub use cone::{fr_cone, PolyhedralCone};
pub use stats::{formulation_stats, h, FormulationStats, PublishedCounts};
