use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown node id `{0}`")]
    UnknownNode(String),

    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),

    #[error("self-loop on node `{0}`")]
    SelfLoop(String),

    #[error("negative count {count} on dyad ({origin}, {dest})")]
    NegativeCount { origin: String, dest: String, count: i64 },

    #[error("duplicate dyad ({origin}, {dest})")]
    DuplicateDyad { origin: String, dest: String },

    #[error("node index {0} out of range")]
    NodeIndex(usize),

    #[error("stored value on dyad ({i}, {j}) is {stored}, caller assumed {assumed}")]
    StaleValue { i: usize, j: usize, stored: u64, assumed: u64 },

    #[error("unknown covariate `{0}`")]
    UnknownCovariate(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("term `{0}` has no coefficient")]
    MissingCoefficient(String),

    #[error("non-finite linear predictor on dyad ({i}, {j})")]
    NonFinite { i: usize, j: usize },

    #[error("singular Hessian; collinear terms: {}", .terms.join(", "))]
    Collinear { terms: Vec<String> },

    #[error("covariate mismatch within term group: {0}")]
    GroupMismatch(String),

    #[error("knockout weights sum to zero for `{0}`")]
    ZeroWeights(String),

    #[error("empty subset")]
    EmptySubset,

    #[error("node `{0}` has no group assignment")]
    Unassigned(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
