use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("number of days must be at least 1, got {0}")]
    InvalidDays(usize),

    #[error("probability vector is empty")]
    EmptyDistribution,

    #[error("entry {index} is {value}; probabilities must be finite and nonnegative")]
    InvalidEntry { index: usize, value: f64 },

    #[error("sum {sum} exceeds tolerance {tolerance:e} around 1")]
    NotNormalized { sum: f64, tolerance: f64 },

    #[error("day {day} outside 1..={days}")]
    DayOutOfRange { day: usize, days: usize },

    #[error("remaining budget {0} outside [0, 1]")]
    BudgetOutOfRange(f64),

    #[error("decision {decision} outside [0, {budget}]")]
    DecisionOutOfRange { decision: f64, budget: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid has {count} lattice points, cap is {cap}")]
    GridTooLarge { count: u128, cap: u128 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
