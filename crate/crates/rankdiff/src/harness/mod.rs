//! Validation battery, the coalescence experiment, output files and the
//! command implementations behind the `rankdiff` binary.

pub mod checks;
pub mod commands;
pub mod config;
pub mod output;
pub mod report;
pub mod suite;
pub mod tanaka;

pub use config::{ExperimentConfig, OutputFormat, Subcommand};
pub use output::emit_svg_heatmap;
pub use report::{GofKind, GofReport};
pub use suite::{run_validation_suite, run_validation_suite_with, SuiteSizes};
pub use tanaka::{tanaka_coalescence_experiment, CoalescenceConfig, FSpec};
