//! Ingestion, cleaning and summary statistics for the Adult census table.

mod adult;
mod stats;

pub use adult::{
    load_adult, load_adult_dir, load_adult_files, preprocess, preprocess_with, BaseDataset,
    Partition, PartitionFilter, PreprocessOptions, RawRecord, RawTable, ADULT_COLUMNS,
};
pub use stats::{cohort_stats, compare_stats, quantile_sorted, write_comparison_csv, CohortStats, StatRow, VariableStats};
