//! Guaranteed a posteriori error estimates for weighted graph Laplacian
//! systems `Lu = f`.
//!
//! Given an approximate solution `v`, the estimator builds a flow `τ` with
//! `Gᵀτ = f` from a spanning-tree solve plus a cycle-space correction, and
//! reports `ψ = ‖DGv − τ‖_{D⁻¹} ≥ ‖u − v‖_L` with a per-edge split.

pub mod baseline;
pub mod cli;
pub mod cycles;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod graph;
pub mod io;
pub mod schwarz;
pub mod tree;

pub use error::{Error, Result};
pub use estimator::{error_estimate, BasisChoice, CycleSolver, ErrorEstimate, EstimatorConfig};
pub use graph::{validate_graph, EdgeFlow, Graph, RawEdge, VertexFunction};
