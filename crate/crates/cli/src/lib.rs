//! Command implementations behind the `heatdecode` binary.

pub mod bench;
pub mod commands;
pub mod error;
pub mod sweep;

pub use bench::{run_bench, BenchConfig, BenchOutcome};
pub use error::CliError;
pub use sweep::{run_sweep, SweepConfig};
