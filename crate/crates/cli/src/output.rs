//! Report printing and the error type every command returns.

use std::fmt;
use std::process::ExitCode;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::json;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
}

/// Something a command prints on success.
pub trait Report: Serialize {
    fn text(&self) -> String;
}

pub fn print<R: Report>(format: ReportFormat, report: &R) {
    match format {
        ReportFormat::Text => println!("{}", report.text()),
        ReportFormat::Json => println!(
            "{}",
            serde_json::to_string_pretty(report).expect("reports serialise")
        ),
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: String,
    pub message: String,
    /// Process exit status.
    pub status: u8,
}

impl CliError {
    pub fn new(code: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            code: code.into(),
            message: message.into(),
            status: 2,
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new("config", message)
    }

    pub fn io(context: &str, e: std::io::Error) -> Self {
        Self::new("io", format!("{context}: {e}"))
    }

    pub fn exit(&self, format: ReportFormat) -> ExitCode {
        match format {
            ReportFormat::Text => eprintln!("error: {}", self.message),
            ReportFormat::Json => eprintln!(
                "{}",
                json!({ "error": self.code, "message": self.message })
            ),
        }
        ExitCode::from(self.status)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<protobooth_backend::RepoError> for CliError {
    fn from(e: protobooth_backend::RepoError) -> Self {
        Self::new(e.code(), e.to_string())
    }
}

impl From<protobooth_backend::ClientError> for CliError {
    fn from(e: protobooth_backend::ClientError) -> Self {
        let code = match &e {
            protobooth_backend::ClientError::Unreachable(_) => "unreachable",
            protobooth_backend::ClientError::Api { body, .. } => body.error.as_str(),
            protobooth_backend::ClientError::Decode(_) => "decode",
        }
        .to_owned();
        Self::new(code, e.to_string())
    }
}

impl From<protobooth_backend::FigureError> for CliError {
    fn from(e: protobooth_backend::FigureError) -> Self {
        Self::new(e.code(), e.to_string())
    }
}

impl From<protobooth_analytics::AnalyticsError> for CliError {
    fn from(e: protobooth_analytics::AnalyticsError) -> Self {
        Self::new("analytics", e.to_string())
    }
}

impl From<protobooth_node::SpoolError> for CliError {
    fn from(e: protobooth_node::SpoolError) -> Self {
        Self::new("spool", e.to_string())
    }
}

impl From<protobooth_node::NodeError> for CliError {
    fn from(e: protobooth_node::NodeError) -> Self {
        Self::new("node", e.to_string())
    }
}
