use std::path::Path;

use serde_json::json;

/// Failure of a command, mapped to an exit code and a one-line JSON report.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    MissingFile(String),
    Io(String),
    HashMismatch { path: String, expected: String, found: String },
    NonConvergence(Vec<String>),
    Core(patcs::Error),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::NotFound {
            Self::MissingFile(path.display().to_string())
        } else {
            Self::Io(format!("{}: {e}", path.display()))
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::HashMismatch { .. } => 2,
            Self::NonConvergence(_) => 3,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::MissingFile(_) => "missing_file",
            Self::Io(_) => "io",
            Self::HashMismatch { .. } => "config_hash_mismatch",
            Self::NonConvergence(_) => "non_convergence",
            Self::Core(patcs::Error::Shape { .. }) => "shape_mismatch",
            Self::Core(_) => "computation",
        }
    }

    pub fn to_json(&self) -> String {
        let mut v = json!({ "error": self.kind(), "message": self.to_string() });
        match self {
            Self::HashMismatch { path, expected, found } => {
                v["path"] = json!(path);
                v["expected"] = json!(expected);
                v["found"] = json!(found);
            }
            Self::NonConvergence(methods) => v["methods"] = json!(methods),
            Self::MissingFile(p) => v["path"] = json!(p),
            _ => {}
        }
        v.to_string()
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) => write!(f, "invalid configuration: {m}"),
            Self::MissingFile(p) => write!(f, "missing input file {p}"),
            Self::Io(m) => write!(f, "{m}"),
            Self::HashMismatch { path, .. } => write!(f, "{path} was produced under a different configuration"),
            Self::NonConvergence(m) => write!(f, "stopping tolerance not reached by {}; outputs written", m.join(", ")),
            Self::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<patcs::Error> for CliError {
    fn from(e: patcs::Error) -> Self {
        match e {
            patcs::Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => Self::MissingFile(io.to_string()),
            e => Self::Core(e),
        }
    }
}
