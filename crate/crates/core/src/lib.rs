//! Grading triage: decide per student and rubric item whether an AI-assigned
//! score can be accepted automatically or should go to a human grader.
//!
//! The pipeline fits a two-parameter logistic item response model to the AI
//! score matrix ([`irt`]), measures each cell's risk as the absolute gap
//! between the AI score and the model expectation ([`filter`]), and
//! quantifies the workload/agreement trade-off against ground-truth grades
//! over a grid of thresholds ([`metrics`]). [`synth`] generates seeded
//! synthetic exams for testing and calibration.

pub mod data;
pub mod error;
pub mod filter;
pub mod irt;
pub mod metrics;
pub mod plot;
pub mod schema;
pub mod synth;

pub use data::{align, load_rubric, load_scores, AlignedPairs, CellKey, RubricSpec, ScoreMatrix};
pub use error::{DataError, FilterError, IrtError, MetricsError, SchemaError, SynthError};
pub use filter::{apply_filter, decide, risk, DecisionRecord, FilterConfig, Outcome, RouteReason};
pub use irt::{expected_scores, fit_2pl, icc, sample_icc_curves, FitConfig, FitResult, ItemParams};
pub use metrics::{regress_totals, sweep, totals_over, RegressionStats, SweepRow};
pub use synth::{generate, SynthConfig};
