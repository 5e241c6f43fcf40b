//! Configuration, sweeps over `m`, refinement studies and report export.

pub mod check;
pub mod config;
pub mod export;
pub mod refine;
pub mod sweep;

pub use check::{run_operator_suite, CheckResult};
pub use config::{presets, RunConfig};
pub use export::{export_refinement, export_sweep, read_csv, summary_json, write_csv};
pub use refine::{fund1_study, run_refinement_study, RefinementReport};
pub use sweep::{assemble, run_m_sweep, run_single, MRun, SweepReport};
