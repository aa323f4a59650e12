use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid action {action} in state {state} (only {n_actions} actions)")]
    InvalidAction {
        state: usize,
        action: usize,
        n_actions: usize,
    },
    #[error("no reward estimate for state {state}, action {action}")]
    MissingEstimate { state: usize, action: usize },
    #[error("replay buffer is empty")]
    NoData,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
