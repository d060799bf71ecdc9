//! Scenario runner and verification suite on top of `firmlab-core`.

pub mod config;
pub mod output;
pub mod scenarios;
pub mod verify;

pub use config::ScenarioConfig;
pub use scenarios::{run_scenario, RunSummary, Scenario, ScenarioRun};
pub use verify::{verify_all, VerifyOptions, VerifyReport};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERIFY_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}
