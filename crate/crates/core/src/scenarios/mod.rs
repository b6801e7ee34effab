//! Reproducible experiment harness: configs, presets, sweeps, persistence
//! and comparison against reference values.

pub mod columnar;
pub mod config;
pub mod presets;
pub mod report;
pub mod run;

pub use columnar::Table;
pub use config::{
    AnalysisConfig, OutputConfig, OutputFormat, ScenarioConfig, SimulationConfig, SourceConfig,
    SweepPoint,
};
pub use presets::{preset, preset_names, reference, PRESETS};
pub use report::{
    compare_report, CoherenceReport, Comparison, PointRecord, Provenance, ReferenceTable, Trend,
};
pub use run::{
    build_ensemble, delay_half_range, grid_for, point_dir_name, run_scenario, run_scenario_with,
    write_run, PointOutcome, ScenarioRun,
};
