//! Evaluation harness: topic/qrels/run formats, graded-relevance
//! quantization, precision at fixed cutoffs, paired t-tests and the
//! win/loss comparison tables used to compare runs.

mod compare;
mod formats;
mod metrics;
mod report;
mod ttest;

pub use compare::{compare_runs, format_cell, ComparisonCell, ComparisonMatrix};
pub use formats::{
    parse_qrels, parse_run, parse_topics, write_qrels, write_run, write_topics, FormatError, Grade,
    Qrels, RunEntry, RunFile, Topic, Topics,
};
pub use metrics::{macro_average, per_topic_precision, precision_at_k, quantize, MacroTable};
pub use report::{display_label, format_precision_row, render_precision_table};
pub use ttest::{paired_ttest, TTest, TTestError};

pub const DEFAULT_CUTOFFS: [usize; 4] = [1, 3, 5, 10];
