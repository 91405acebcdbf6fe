mod args;
mod commands;
mod report;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use args::Cli;

/// Failures surfaced to the shell.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] sphreg::Error),
    #[error("fit did not converge: {0}")]
    NotConverged(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use sphreg::Error as E;
        match self {
            CliError::Core(E::Io(_)) => 4,
            CliError::Core(E::Convergence(_)) | CliError::NotConverged(_) => 3,
            _ => 2,
        }
    }

    fn kind(&self) -> &'static str {
        use sphreg::Error as E;
        match self {
            CliError::Core(E::Io(_)) => "io",
            CliError::Core(E::Convergence(_)) | CliError::NotConverged(_) => "convergence",
            CliError::Core(E::Row { .. }) => "row",
            CliError::Usage(_) => "usage",
            CliError::Core(_) => "validation",
        }
    }

    fn to_json(&self) -> String {
        let mut v = json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        if let CliError::Core(sphreg::Error::Row { row, .. }) = self {
            v["row"] = json!(row);
        }
        v.to_string()
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let err = CliError::Usage(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code());
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
