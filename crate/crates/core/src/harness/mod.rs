//! Experiment orchestration: inputs, synthetic data and scenario matrices.

pub mod ingest;
pub mod matrix;
pub mod synthetic;

pub use ingest::{ingest_profiles, parse_series, read_series, write_bundle, write_series};
pub use matrix::{
    cell_profiles, derive_seed, percent_delta, run_matrix, scenario_profiles, Cell, CellResult, ExperimentMatrix, MatrixOutcome,
    SystemKind,
};
pub use synthetic::{archetype, generate_synthetic_profile, Archetype, HOUSE_21355, HOUSE_23618};
