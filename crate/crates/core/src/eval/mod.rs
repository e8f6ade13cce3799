//! Synthetic signals, measurements and the acceptance suite.

pub mod acceptance;
pub mod measure;
pub mod report;
pub mod signals;

pub use acceptance::{criteria, run_acceptance, Criterion, CriterionOutcome};
pub use report::{write_csv, Bound, MetricReport};
pub use signals::{gen_signal, SignalKind};
