//! Getting graphs in and reports out.

mod grid;
mod matrix_market;
mod preprocess;
mod random;
pub mod report;

pub use grid::{sample_and_rhs, uniform_grid, GridGraph, GridSpec};
pub use matrix_market::{parse_matrix_market, read_matrix_market, write_matrix_market, RawGraph};
pub use preprocess::{preprocess, preprocess_with_labels, Preprocessed};
pub use random::random_connected_graph;
