//! File formats, the normalized-MSE experiment and its CSV/SVG output.

pub mod config;
pub mod experiment;
pub mod io;
pub mod report;

pub use config::{Estimator, ExperimentConfig};
pub use experiment::{run_experiment, summarize, CellSummary, ExperimentRow};
pub use io::{load_pairs, load_rankings, load_theta, save_pairs, save_rankings, save_theta, ThetaFile};
pub use report::{emit_csv, emit_plot, read_csv, CSV_HEADER};
