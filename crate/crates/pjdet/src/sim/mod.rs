//! Simulation harness: configuration, the deterministic parallel Monte Carlo
//! sweep engine, theory-curve overlay, result persistence, and op-count
//! reporting.

pub mod config;
pub mod opcount;
pub mod output;
pub mod sweep;
pub mod theory;

pub use config::ExperimentConfig;
pub use opcount::{opcount_report, OpcountReport};
pub use output::{emit_results, read_csv, write_csv, CsvRow, EmittedFiles};
pub use sweep::{run_sweep, run_sweep_with_progress, PointResult, RunManifest, SweepResult};
pub use theory::theory_curves;
