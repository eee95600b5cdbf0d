//! V2V communication graph, link pruning and compression-ratio optimization.
//!
//! Link selection and ratio optimization are solved in sequence: under an
//! additive per-hop (store-and-forward) delay model the joint problem
//! separates into a shortest-path problem per helper followed by a convex
//! program over the compression ratios.

mod graph;
mod model;
mod pgd;

pub use graph::{build_graph, build_graph_static, direct_links, select_links, CommGraph, LinkSelection, SquareMatrix};
pub use model::{
    kkt_residual, mean_delay, optimal_ratios_analytic, CompressionPlan, DelayModel, ImportanceWeights,
    DEFAULT_DISTANCE_FLOOR,
};
pub use pgd::{optimize_delay, project_feasible, PgdOptions};
