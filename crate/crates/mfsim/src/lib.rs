//! Runner, file formats, experiment presets and plot data for the
//! `mfsim-core` market model.

pub mod config;
pub mod experiment;
pub mod format;
pub mod pipeline;
pub mod plot;

pub use config::{load_config, parse_config, render_config, ConfigError};
pub use experiment::{run_experiment, ExperimentOptions, ExperimentOutcome, Preset};
pub use pipeline::{run_cell, run_parallel, CellResult, LagReport};
pub use plot::{emit_plot_data, Figure};
