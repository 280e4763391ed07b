use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A tuple needs at least two distinct nodes for a kinship label.
    #[error("kinship needs at least two nodes, got {0}")]
    TooFewNodes(usize),

    /// Index points of different kinds (tree nodes and array cells) were mixed,
    /// or a language was applied to the wrong kind of index.
    #[error("mixed or incompatible index domains: {0}")]
    MixedDomains(String),

    /// The exhaustive search found no homogeneous substructure of the requested
    /// shape. `required_estimate` is a standard finite Ramsey upper bound for the
    /// source size at which success is guaranteed (saturates at `u64::MAX`).
    #[error("insufficient source: {detail} (sufficient size estimate {required_estimate})")]
    InsufficientSource { required_estimate: u64, detail: String },

    /// The search was abandoned after exhausting its step budget.
    #[error("search budget of {0} steps exhausted")]
    SearchBudgetExceeded(u64),

    /// str-extraction was given parameters that are not s-indiscernible.
    #[error("source parameters are not s-indiscernible")]
    NotSIndiscernible,

    /// A finite universe or enumeration grew past its configured cap.
    #[error("{what} size {size} exceeds cap {cap}")]
    CapExceeded { what: String, size: u128, cap: u128 },

    /// A formula refers to an undeclared relation, sort or variable, or is ill-sorted.
    #[error("ill-formed formula: {0}")]
    IllFormed(String),

    /// An operation's precondition on the analysed witness does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
