//! Experiment configuration, execution and deterministic CSV/JSON output.

pub mod config;
pub mod output;
pub mod reports;
pub mod run;
pub mod sweep;

pub use config::{load_json, AlphaKind, AlphaSpec, ComparatorSpec, DomainSpec, ExperimentConfig};
pub use output::{write_outputs, OutputFormat, Table};
pub use reports::{nonoblivious, tightness, verify_lemmas, LemmaConfig};
pub use run::{run_experiment, ExperimentResult, TraceRow};
pub use sweep::{run_sweep, SweepConfig, SweepMode, SweepResult};
