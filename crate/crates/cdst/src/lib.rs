//! Cost-distance Steiner trees: connect a set of weighted terminals to a
//! root so that total edge length plus weighted root-to-terminal path
//! lengths is small.
//!
//! The pipeline builds an initial Steiner tree, normalizes it into a binary
//! arborescence, splits off subtrees whose expected re-attachment cost is
//! within budget, and reconnects every piece to the root through a
//! cost-optimal port. Every guarantee the analysis provides is re-checked at
//! runtime and recorded in a [`report::RunReport`].
//!
//! Entry points:
//! - [`model::Instance`] — points, metric, root, weighted terminals.
//! - [`reconnect::solve`] / [`reconnect::solve_with_initial_tree`] — the
//!   full pipeline.
//! - [`analysis`] — closed-form approximation factors and gap values.
//! - [`oracle`] — exhaustive ground truth for desk-scale verification.
//! - [`instances`] — JSON (de)serialization and instance generators.

pub mod aggregates;
pub mod analysis;
pub mod arborescence;
pub mod error;
pub mod init;
pub mod instances;
pub mod model;
pub mod oracle;
pub mod reconnect;
pub mod report;
pub mod split;

pub use error::{Error, Result};
pub use model::{
    delay_lower_bound, evaluate_cost, lower_bound, CostBreakdown, Instance, MetricSpec, Solution,
};
pub use reconnect::{solve, solve_with_initial_tree, BetaMethod, SolveOptions};
pub use report::RunReport;
pub use split::SplitRule;
