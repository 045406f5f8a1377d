//! Command-line front end: ingestion, orchestration and report writing.

pub mod args;
pub mod commands;
pub mod format;
pub mod ingest;
pub mod plotdata;

use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{stage}: {message}")]
    Input { stage: &'static str, message: String },

    /// A numerical or diagnostic failure that is not the user's input.
    #[error("{stage}: {message}")]
    Diagnostic { stage: &'static str, message: String },

    #[error("{stage}: {source}")]
    Core {
        stage: &'static str,
        #[source]
        source: ssbm::Error,
    },

    #[error("i/o: {0}")]
    Io(String),

    #[error("internal: {0}")]
    Internal(String),
}

#[derive(Debug, Serialize)]
struct ErrorReport<'a> {
    schema: u32,
    status: &'static str,
    stage: &'a str,
    kind: &'a str,
    message: String,
    exit_code: i32,
}

impl CliError {
    pub fn input(stage: &'static str, message: impl Into<String>) -> Self {
        CliError::Input {
            stage,
            message: message.into(),
        }
    }

    pub fn core(stage: &'static str) -> impl FnOnce(ssbm::Error) -> Self {
        move |source| CliError::Core { stage, source }
    }

    pub fn stage(&self) -> &str {
        match self {
            CliError::Input { stage, .. } | CliError::Diagnostic { stage, .. } | CliError::Core { stage, .. } => stage,
            CliError::Io(_) => "io",
            CliError::Internal(_) => "internal",
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Input { .. } => "input",
            CliError::Diagnostic { .. } => "diagnostic",
            CliError::Io(_) => "io",
            CliError::Internal(_) => "internal",
            CliError::Core { source, .. } => match source.root_cause() {
                ssbm::Error::Domain(_) => "domain",
                ssbm::Error::Support(_) => "support",
                ssbm::Error::NotExist { .. } => "not_exist",
                ssbm::Error::NoRoot(_) => "no_root",
                ssbm::Error::NonConvergence { .. } => "non_convergence",
                ssbm::Error::Degenerate(_) => "degenerate",
                ssbm::Error::Insufficient(_) => "insufficient",
                ssbm::Error::AtBlockSize { .. } => "internal",
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input { .. } => EXIT_INPUT,
            CliError::Diagnostic { .. } => EXIT_NUMERICAL,
            CliError::Io(_) | CliError::Internal(_) => EXIT_INTERNAL,
            CliError::Core { source, .. } => match source.root_cause() {
                ssbm::Error::Domain(_) | ssbm::Error::Support(_) => EXIT_INPUT,
                _ => EXIT_NUMERICAL,
            },
        }
    }

    /// Machine-readable error document.
    pub fn to_json(&self) -> String {
        let report = ErrorReport {
            schema: format::SCHEMA_VERSION,
            status: "error",
            stage: self.stage(),
            kind: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        };
        format::to_json(&report).unwrap_or_else(|_| {
            format!("{{\"schema\": 1, \"status\": \"error\", \"exit_code\": {}}}\n", self.exit_code())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_cause() {
        let domain = CliError::core("x")(ssbm::Error::Domain("bad".into()));
        assert_eq!(domain.exit_code(), EXIT_INPUT);
        let nested = CliError::core("x")(ssbm::Error::AtBlockSize {
            n: 5.0,
            source: Box::new(ssbm::Error::Degenerate("flat".into())),
        });
        assert_eq!(nested.exit_code(), EXIT_NUMERICAL);
        assert_eq!(nested.kind(), "degenerate");
        assert_eq!(CliError::Internal("x".into()).exit_code(), EXIT_INTERNAL);
        let v: serde_json::Value = serde_json::from_str(&nested.to_json()).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["exit_code"], 3);
        assert_eq!(v["stage"], "x");
    }
}
