use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("agent index {index} out of range (graph has {len} agents)")]
    AgentOutOfRange { index: usize, len: usize },

    #[error("resource index {index} out of range (graph has {len} resources)")]
    ResourceOutOfRange { index: usize, len: usize },

    #[error("invalid matching: {0}")]
    InvalidMatching(String),

    #[error("matching is not maximum: augmenting path between agent {agent} and resource {resource}")]
    NotMaximum { agent: usize, resource: usize },

    #[error("enumeration budget exceeded: more than {0} maximum matchings")]
    EnumerationBudgetExceeded(u64),

    #[error("brute-force guard: {nodes} nodes exceeds the limit of {limit}")]
    BruteForceGuard { nodes: usize, limit: usize },

    #[error("unknown restriction id {0}")]
    UnknownRestriction(usize),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("undefined block probability: p0 and the active mass are both zero")]
    UndefinedProbability,

    #[error("invalid blocks: {0}")]
    InvalidBlocks(String),

    #[error("solver precondition failed: {0}")]
    Solver(String),

    #[error("no solver available: {0}")]
    NoSolver(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at byte {offset} (line {line}, column {column}): {message}")]
    Parse {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}:{line}: {message}")]
    Csv {
        path: String,
        line: u64,
        message: String,
    },

    #[error("instance failed validation: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag, used for JSON error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::AgentOutOfRange { .. } | Error::ResourceOutOfRange { .. } => "index_out_of_range",
            Error::InvalidMatching(_) => "invalid_matching",
            Error::NotMaximum { .. } => "not_maximum",
            Error::EnumerationBudgetExceeded(_) => "enumeration_budget_exceeded",
            Error::BruteForceGuard { .. } => "guard_violation",
            Error::UnknownRestriction(_) => "unknown_restriction",
            Error::InvalidInstance(_) => "invalid_instance",
            Error::UndefinedProbability => "undefined_probability",
            Error::InvalidBlocks(_) => "invalid_blocks",
            Error::Solver(_) => "solver_precondition",
            Error::NoSolver(_) => "no_solver_available",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Parse { .. } => "parse_error",
            Error::Csv { .. } => "csv_error",
            Error::Validation(_) => "validation_failed",
            Error::Io(_) => "io_error",
        }
    }
}
