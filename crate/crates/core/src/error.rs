use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("provider {0} owns no items")]
    EmptyProvider(usize),

    #[error("ranking size K={k} exceeds the number of items ({n_items})")]
    RankingTooLarge { k: usize, n_items: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("duplicate item {0} in decision")]
    DuplicateItem(usize),

    #[error("index {index} out of range for {what} (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("click value {0} is not 0 or 1")]
    InvalidClick(f64),

    #[error("dual variable lies outside the feasible region (negative mass {neg_mass} < -{lambda})")]
    InfeasibleDual { neg_mass: f64, lambda: f64 },

    #[error("enumeration budget exceeded: {required} states needed, limit is {limit}")]
    EnumerationBudget { required: f64, limit: f64 },

    #[error("no decision sequence satisfies the exposure budgets")]
    BudgetInfeasible,

    #[error("unknown policy id `{0}`")]
    UnknownPolicy(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("{0}")]
    EmptyData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
