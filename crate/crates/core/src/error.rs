use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid group table: {0}")]
    InvalidTable(String),
    #[error("invalid graph of groups: {0}")]
    InvalidGraph(String),
    #[error("invalid matrix group: {0}")]
    InvalidMatrix(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("cannot parse word: {0}")]
    BadWord(String),
    #[error("elements belong to different groups or backends")]
    BackendMismatch,
    #[error("enumeration cap {cap} exceeded ({what})")]
    CapExceeded { what: String, cap: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("spec error: {0}")]
    Spec(String),
    #[error("outside certified region: {0}")]
    Uncertified(String),
    #[error("not found: {0}")]
    NotFound(String),
}

pub type Result<T> = std::result::Result<T, Error>;
