//! Official SemEval-2010 Task 8 scoring, reports and the ablation harness.

mod ablation;
mod official;
mod report;
mod scoring;

pub use ablation::{
    row_columns, run_ablation, AblationFamily, AblationReport, AblationRow,
};
pub use official::{
    align_by_id, format_answer_key, parse_answer_key, parse_official_output, read_answer_key,
    run_official_scorer, write_answer_key,
};
pub use report::{Comparison, ComparisonRow};
pub use scoring::{report_order, score_ids, score_official, ClassReport, ClassRow, ConfusionMatrix};
