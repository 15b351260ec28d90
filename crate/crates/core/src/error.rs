use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario parse error at `{key}` (line {line}, column {column}): {message}")]
    Parse {
        key: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario: {constraint}")]
    Invalid { constraint: String },
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("vehicle {0} has not exited")]
    NotExited(u32),
    #[error("crossing recorded on unknown inflow {0}")]
    UnknownInflow(usize),
    #[error("infeasible fixed-time plan: {0}")]
    InfeasiblePlan(String),
    #[error("negative target flow {0} veh/hr")]
    NegativeTarget(f64),
    #[error("empty statistics window")]
    EmptyWindow,
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("output directory {0} is not empty (use --force to overwrite)")]
    NotEmpty(String),
}
