// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Csv {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{}:{line}: non-contiguous index, expected {expected}, got {got}", path.display())]
    NonContiguous {
        path: PathBuf,
        line: u64,
        expected: u64,
        got: u64,
    },
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Detector(#[from] mocpd::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    CsvWrite(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn csv(path: &Path, line: u64, message: impl Into<String>) -> Self {
        CliError::Csv {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Csv { .. } => "csv",
            CliError::NonContiguous { .. } => "non_contiguous",
            CliError::MissingFile(_) => "missing_file",
            CliError::InvalidParams(_) => "invalid_params",
            CliError::Detector(mocpd::Error::Config(_)) => "invalid_config",
            CliError::Detector(_) => "detector",
            CliError::Json(_) => "json",
            CliError::CsvWrite(_) => "csv",
        }
    }

    /// The JSON object printed on stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Payload<'a> {
            error: &'a str,
            message: String,
            #[serde(skip_serializing_if = "Option::is_none")]
            line: Option<u64>,
        }
        let line = match self {
            CliError::Csv { line, .. } | CliError::NonContiguous { line, .. } => Some(*line),
            _ => None,
        };
        serde_json::to_string(&Payload {
            error: self.kind(),
            message: self.to_string(),
            line,
        })
        .unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", self.kind()))
    }
}
