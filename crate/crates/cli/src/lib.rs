//! Configuration parsing and scenario pipelines behind the `pmcontract` binary.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;

pub use config::{parse_config, parse_config_with, ConfigError, ConfigErrorKind, ExperimentConfig, Scenario};
pub use run::{run, CheckResult, RunError, RunOutcome};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const INSTABILITY: i32 = 3;
    pub const CHECK_FAILED: i32 = 4;
}
