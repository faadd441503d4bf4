//! Confusion matrices, per-class and aggregate scores, report files.

mod confusion;
mod report;
mod scores;

pub use confusion::{confusion_matrix, ConfusionMatrix};
pub use report::{
    class_name, confusion_csv, curves_csv, emit_report, parse_summary, repeat_summary_text, summary_text, ReportPaths,
    REPORT_VERSION,
};
pub use scores::{class_scores, derive_scores, mean_std, Aggregate, ClassScores, ScoreReport, ZeroFlags};
