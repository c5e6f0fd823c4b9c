use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not Hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpError {
    #[error("SDP dimension must be at least 1")]
    EmptyDimension,
    #[error("constraint {index}: operand is not Hermitian")]
    NotHermitian { index: usize },
    #[error("constraint {index}: operand does not match dimension {dim}")]
    Dimension { index: usize, dim: usize },
    #[error("constraint {index}: non-finite data")]
    NonFinite { index: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("subproblem infeasible at the bisection floor γ = {gamma}")]
    InfeasibleAtFloor { gamma: f64 },
    #[error("bisection interval is empty: lo = {lo} > hi = {hi}")]
    EmptyInterval { lo: f64, hi: f64 },
    #[error("no feasible rank-one candidate among {draws} draws")]
    ExtractionFailed { draws: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("brute-force search limited to N <= 3 and <= 16 phase levels (got N = {n}, levels = {levels})")]
    SizeGuard { n: usize, levels: usize },
    #[error("invalid sweep: {0}")]
    Sweep(String),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
