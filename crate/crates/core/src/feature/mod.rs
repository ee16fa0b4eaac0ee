//! Feature definitions, built-in calculators and the extraction engine.

mod builtins;
mod collection;
mod extract;
mod matrix;
mod naming;
mod wrapper;

pub use builtins::{builtin, BUILTIN_NAMES};
pub use collection::{expand_multiple, FeatureCollection, FeatureDescriptor, GroupKey};
pub use extract::{
    aggregate_log, extract, extract_views, ExtractOptions, Extraction, LogRecord, LogSummary,
    SparsityWarning,
};
pub(crate) use extract::extract_views_with;
pub use matrix::{Column, FeatureMatrix};
pub use naming::{format_output_name, parse_output_name, ParsedName};
pub use wrapper::{
    make_robust, make_robust_default, FeatureFn, FuncSignature, FuncWrapper, InputMode, OutputType,
    Robust,
};
