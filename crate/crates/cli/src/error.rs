use heatstat_core::Error as CoreError;
use serde_json::json;

/// Failures surfaced to the shell. Config problems exit with 2,
/// numerical-range problems with 3, anything else with 1; every path
/// prints a one-line JSON object on stderr.
#[derive(Debug)]
pub enum CliError {
    Config { path: Option<String>, message: String },
    Numeric { kind: String, message: String },
    Io { message: String },
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn config(path: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            path: Some(path.to_string()),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numeric { .. } => 3,
            CliError::Io { .. } => 1,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            CliError::Config { path, message } => json!({
                "error": {
                    "code": 2,
                    "kind": "config",
                    "path": path,
                    "message": message,
                }
            }),
            CliError::Numeric { kind, message } => json!({
                "error": {
                    "code": 3,
                    "kind": kind,
                    "message": message,
                }
            }),
            CliError::Io { message } => json!({
                "error": {
                    "code": 1,
                    "kind": "io",
                    "message": message,
                }
            }),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io {
            message: err.to_string(),
        }
    }
}

/// Attach the config field that triggered a core-library rejection.
/// Contract violations of the inputs map to exit code 2; failures of
/// the numerics at run time map to exit code 3.
pub fn from_core(path: &str, err: CoreError) -> CliError {
    match &err {
        CoreError::InvalidInput(_)
        | CoreError::DimensionMismatch { .. }
        | CoreError::NotHermitian { .. }
        | CoreError::OrderTooHigh { .. }
        | CoreError::DegenerateObservable => CliError::Config {
            path: Some(path.to_string()),
            message: err.to_string(),
        },
        CoreError::RangeExceeded { .. } => numeric("range_exceeded", path, err),
        CoreError::TooLarge { .. } => numeric("too_large", path, err),
        CoreError::NoConvergence { .. } => numeric("no_convergence", path, err),
        CoreError::DegenerateFit { .. } => numeric("degenerate_fit", path, err),
        CoreError::NoRootInBracket { .. } => numeric("no_root_in_bracket", path, err),
        CoreError::DegenerateRoot { .. } => numeric("degenerate_root", path, err),
        CoreError::RouteMismatch { .. } => numeric("route_mismatch", path, err),
    }
}

fn numeric(kind: &str, path: &str, err: CoreError) -> CliError {
    CliError::Numeric {
        kind: kind.to_string(),
        message: format!("{path}: {err}"),
    }
}
