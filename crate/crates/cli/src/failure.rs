//! Command failures, their exit codes and their JSON form.

use serde::Serialize;
use serde_json::json;
use xjulia_core::Error;

use crate::settings::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// Invalid configuration or missing inputs; exit code 2.
    Config,
    /// A numerical contract failed; exit code 1.
    Numerical,
    /// Reading or writing files failed; exit code 1.
    Io,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub kind: Kind,
    pub message: String,
    pub field: Option<String>,
}

impl Failure {
    pub fn config(message: impl Into<String>, field: Option<String>) -> Self {
        Self {
            kind: Kind::Config,
            message: message.into(),
            field,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::Config => 2,
            Kind::Numerical | Kind::Io => 1,
        }
    }

    pub fn to_json(&self) -> String {
        json!({
            "schema_version": SCHEMA_VERSION,
            "error": { "kind": self.kind, "message": self.message, "field": self.field },
        })
        .to_string()
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = match e {
            Error::InvalidParams { .. }
            | Error::InvalidDarboux(_)
            | Error::PresetRejected(_)
            | Error::InvalidArgument(_)
            | Error::DegreeCap { .. } => Kind::Config,
            _ => Kind::Numerical,
        };
        let field = match e {
            Error::InvalidParams { .. } | Error::InvalidDarboux(_) | Error::PresetRejected(_) => {
                Some("family".to_string())
            }
            _ => None,
        };
        Self {
            kind,
            message: e.to_string(),
            field,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            kind: Kind::Io,
            message: e.to_string(),
            field: None,
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self {
            kind: Kind::Io,
            message: e.to_string(),
            field: None,
        }
    }
}
