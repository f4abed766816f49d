use thiserror::Error;

/// Errors produced by estimation, inference and I/O.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("linear design requires an even node count, got {0}")]
    InvalidDesign(usize),

    #[error("invalid parameter vector: {0}")]
    InvalidParams(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    /// A triple count used in a log-ratio is zero. `nodes` lists every
    /// anchor (or node index) at which the estimator is undefined.
    #[error("degenerate triple counts at {} node(s): {nodes:?}", nodes.len())]
    DegenerateCounts { nodes: Vec<usize> },

    #[error("node filter is empty")]
    EmptyFilter,

    #[error("g_m arguments have mismatched lengths {0} and {1}")]
    InvalidArity(usize, usize),

    /// A μ normaliser needed by the variance formulas vanished.
    #[error("zero mu^({combo}) at index {index:?}")]
    ZeroMu { combo: &'static str, index: (usize, usize) },

    #[error("invalid indices: {0}")]
    InvalidIndices(String),

    #[error("difference covariance is numerically singular (condition {0:.3e})")]
    SingularCovariance(f64),

    #[error("MLE did not converge (gradient norm {0:.3e})")]
    NotConverged(f64),

    #[error("MLE diverged: log-likelihood decreased by {0:.3e}")]
    Diverged(f64),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {0}: self-loop")]
    SelfLoop(usize),

    #[error("line {0}: duplicate edge")]
    DuplicateEdge(usize),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag used in JSON error payloads.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDesign(_) => "InvalidDesign",
            Error::InvalidParams(_) => "InvalidParams",
            Error::InvalidGraph(_) => "InvalidGraph",
            Error::DegenerateCounts { .. } => "DegenerateCounts",
            Error::EmptyFilter => "EmptyFilter",
            Error::InvalidArity(..) => "InvalidArity",
            Error::ZeroMu { .. } => "ZeroMu",
            Error::InvalidIndices(_) => "InvalidIndices",
            Error::SingularCovariance(_) => "SingularCovariance",
            Error::NotConverged(_) => "NotConverged",
            Error::Diverged(_) => "Diverged",
            Error::Parse { .. } => "ParseError",
            Error::SelfLoop(_) => "SelfLoop",
            Error::DuplicateEdge(_) => "DuplicateEdge",
            Error::Config(_) => "Config",
            Error::Io(_) => "Io",
        }
    }

    /// True for failures caused by the data being uninformative rather than
    /// malformed (degenerate counts, empty filters, non-convergence).
    pub fn is_degeneracy(&self) -> bool {
        matches!(
            self,
            Error::DegenerateCounts { .. }
                | Error::EmptyFilter
                | Error::ZeroMu { .. }
                | Error::SingularCovariance(_)
                | Error::NotConverged(_)
                | Error::Diverged(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
