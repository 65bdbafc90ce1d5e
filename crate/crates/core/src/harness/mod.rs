//! Experiment orchestration: configuration, the sweep families and their
//! CSV outputs.

mod config;
mod output;
mod run;

pub use config::{default_bias_grid, BiasPair, ExperimentConfig, Method};
pub use output::{
    emit_csv, emit_plotdata, format_robustness_table, read_rows, robustness, shift_summary,
    Robustness, ShiftSummary, ROW_COLUMNS,
};
pub use run::{
    evaluate_adjusted, evaluate_ba_with, evaluate_lr, run_heatmap, run_noise_sweep, run_umbrella,
    Cell, Mode, Outcome, Preliminary, Row, SeedContext, SkippedCell, SweepResult,
};
