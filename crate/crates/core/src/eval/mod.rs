//! Confusion matrices, one-vs-rest metrics, report formatting and repeated stratified
//! splitting.

mod confusion;
mod cv;
mod metrics;
mod report;

pub use confusion::{confusion, ConfusionMatrix};
pub use cv::{repeated_split_cv, stratified_split, CvSummary, Quartiles, Split};
pub use metrics::{metrics, ClassMetrics, MetricsReport};
pub use report::{render_table, write_report};
