use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("edge list is empty")]
    EmptyGraph,
    #[error("graph is disconnected ({components} components)")]
    DisconnectedGraph { components: usize },
    #[error("self-loop at vertex {vertex}")]
    SelfLoop { vertex: usize },
    #[error("duplicate edge {{{i}, {j}}}")]
    DuplicateEdge { i: usize, j: usize },
    #[error("edge {{{i}, {j}}} has nonpositive weight {weight}")]
    NonpositiveWeight { i: usize, j: usize, weight: f64 },
    #[error("vertex label {vertex} outside 1..={n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported matrix market format: {0}")]
    UnsupportedFormat(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("grid level {0} outside 1..=12")]
    GridLevel(u32),
    #[error("requested {requested} extra edges but only {available} are available")]
    TooManyEdges { requested: usize, available: usize },

    #[error("right-hand side is incompatible: sum {sum:e} exceeds tolerance {tolerance:e}")]
    IncompatibleRhs { sum: f64, tolerance: f64 },
    #[error("root {root} outside 1..={n}")]
    InvalidRoot { root: usize, n: usize },
    #[error("edge set does not form a spanning tree: {0}")]
    NotATree(String),

    #[error("graph does not match the grid layout: {0}")]
    NotAGridGraph(String),
    #[error("cycle basis is empty")]
    EmptyBasis,
    #[error("cycle {cycle} has nonzero divergence at vertex {vertex}")]
    InvalidCycle { cycle: usize, vertex: usize },
    #[error("cycle basis has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("local system {subspace} is singular")]
    SingularLocalSystem { subspace: usize },

    #[error("problem too large for dense routine: {size} > {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("true error is zero")]
    ZeroTrueError,
    #[error("flow is not in W(f): divergence residual {residual:e} exceeds {tolerance:e}")]
    NotInWf { residual: f64, tolerance: f64 },
    #[error(
        "iteration did not converge after {iterations} steps (relative residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("degenerate beta step (A = {a:e}, B = {b:e})")]
    DegenerateBeta { a: f64, b: f64 },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Numerical failures as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IncompatibleRhs { .. }
                | Error::NoConvergence { .. }
                | Error::SingularLocalSystem { .. }
                | Error::NotInWf { .. }
                | Error::ZeroTrueError
                | Error::DegenerateBeta { .. }
        )
    }
}
