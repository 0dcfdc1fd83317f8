//! Scenario files and the canonical experiments.

mod config;
mod output;
mod run;

pub use config::{AnalyzerSection, CalibrationSection, RunSection, Scenario, ScenarioName, ServoSection};
pub use output::{emit_spectrum_csv, emit_zero_span_csv, write_csv, Headline, RunReport};
pub use run::run;
