//! Study configuration, orchestration and report emission.
//!
//! Cells run concurrently on a rayon pool sized by `STOKES_DG_LAB_THREADS`;
//! each cell is sequential, so reports are identical for any thread count.

pub mod config;
pub mod report;
pub mod study;

pub use config::{expected_order, Cell, Coupling, RateParameter, StudyConfig, Tolerances};
pub use report::{
    read_json, write_csv, write_json, write_report, CellRow, CellStatus, Check, Environment, OrderRecord, ReportKind,
    StudyReport,
};
pub use study::{
    mesh_size, run_convergence_study, run_probe, thread_count, ProbeKind,
    THREADS_ENV,
};
