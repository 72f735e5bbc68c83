//! Command-line plumbing: dataset ingestion, configuration, subcommands and
//! report files.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod report;

pub use commands::{run, run_compare, run_fit, run_simulate, Outputs};
pub use config::{standardize_cli, CliError, Invocation, Plan};
pub use dataset::{load_fts_csv, read_numeric_csv, write_matrix_csv, DatasetSpec, Layout, Preprocessing};
pub use report::Report;
