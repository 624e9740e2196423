use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("dimension must be 1 or 2, got {0}")]
    Dimension(usize),
    #[error("axis {axis}: need at least 3 nodes, got {nodes}")]
    TooFewNodes { axis: usize, nodes: usize },
    #[error("axis {axis}: extent must be positive and finite, got {extent}")]
    Extent { axis: usize, extent: f64 },
    #[error("expected {expected} values per axis, got {got}")]
    AxisCount { expected: usize, got: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("bump {index}: amplitude must be nonnegative and finite, got {value}")]
    Amplitude { index: usize, value: f64 },
    #[error("bump width sigma must be positive, got {0}")]
    Sigma(f64),
    #[error("bump {index}: center has {got} coordinates, grid has dimension {dim}")]
    CenterDim { index: usize, got: usize, dim: usize },
    #[error("susceptible floor must lie in [0,1), got {0}")]
    Floor(f64),
    #[error("parameter {name} must be nonnegative and finite, got {value}")]
    Param { name: &'static str, value: f64 },
    #[error("regularization eps must lie in [0,1], got {0}")]
    Eps(f64),
    #[error("step safety factor must lie in (0,1], got {0}")]
    Safety(f64),
    #[error("dt_max must be positive, got {0}")]
    DtMax(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("dt = {dt} exceeds the stability bound {bound} at t = {time}")]
    Unstable { dt: f64, bound: f64, time: f64 },
    #[error("non-finite {field} at node {node}, t = {time}")]
    NonFinite {
        field: &'static str,
        node: usize,
        time: f64,
    },
    #[error("invalid time arguments: {0}")]
    Times(String),
    #[error("diagnostics failed at t = {time}: {source}")]
    Diagnostics {
        time: f64,
        #[source]
        source: DiagnosticsError,
    },
    #[error("regularization list must be strictly decreasing and nonempty")]
    EpsList,
    #[error("run with eps = {eps} failed: {source}")]
    Continuation {
        eps: f64,
        #[source]
        source: Box<StepError>,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("CG stalled after {iterations} iterations, relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("grid sequence must contain at least 3 grids, got {0}")]
    TooFewGrids(usize),
    #[error("grid {0} is not a uniform refinement of its predecessor")]
    NotNested(usize),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config syntax error{}: {message}", fmt_line(*line))]
    Syntax { message: String, line: Option<usize> },
    #[error("config key `{key}`{}: {message}", fmt_line(*line))]
    Invalid {
        key: String,
        message: String,
        line: Option<usize>,
    },
    #[error("bad override `{0}`: expected key=value")]
    Override(String),
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn fmt_line(line: Option<usize>) -> String {
    match line {
        Some(l) => format!(" (line {l})"),
        None => String::new(),
    }
}

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Top-level error for run orchestration.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("{branch}: {source}")]
    Step {
        branch: String,
        #[source]
        source: StepError,
    },
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Output(#[from] OutputError),
}

impl Error {
    pub fn step(branch: impl Into<String>, source: StepError) -> Self {
        Error::Step {
            branch: branch.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 config, 3 numerical, 1 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Grid(_) | Error::Spec(_) => 2,
            Error::Step { .. } | Error::Diagnostics(_) => 3,
            Error::Output(_) => 1,
        }
    }
}
