use thiserror::Error;

/// Errors produced by the engine, simulator, estimators and harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain for `{op}`: {detail}")]
    InvalidDomain { op: &'static str, detail: String },

    #[error("bernoulli probability {0} is outside (0, 1)")]
    InvalidProbability(f64),

    #[error("material map is undefined at the origin")]
    InvalidPosition,

    #[error("simulation diverged at step {step}: {detail}")]
    SimulationDiverged { step: usize, detail: String },

    #[error("instance needs {draws} bernoulli draws, budget is {max}")]
    InstanceTooLarge { draws: usize, max: usize },

    #[error("at least {needed} samples required, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("optimizer diverged at step {step}: gradient {grad}")]
    OptimizerDiverged { step: usize, grad: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
