//! CSV ingestion and output, and JSON configuration documents.

mod config;
mod table;

pub use self::config::{
    FeatureConfigDoc, FeatureEntryDoc, FunctionDoc, OptionsDoc, PipelineConfigDoc, RobustDoc,
    SeriesItem, SeriesSpec, StepDoc,
};
pub use self::table::{
    format_timestamp, load_csv, parse_timestamp, series_file_name, write_matrix, write_series_csv,
    LoadOptions,
};
