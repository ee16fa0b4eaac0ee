use std::path::PathBuf;

use crate::index::IndexKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("series name must not be empty")]
    EmptyName,
    #[error(
        "name `{name}` is reserved: identifiers may not contain `__` or `|`, nor start or end with `_`"
    )]
    ReservedCharacterInName { name: String },
    #[error("series `{name}`: index decreases at position {position}")]
    NonMonotonicIndex { name: String, position: usize },
    #[error("series `{name}`: index has {index_len} entries but values have {values_len}")]
    LengthMismatch {
        name: String,
        index_len: usize,
        values_len: usize,
    },
    #[error("index kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: IndexKind, found: IndexKind },
    #[error("series `{name}` has {len} sample(s); at least 2 are required")]
    TooShort { name: String, len: usize },
    #[error("series `{0}` is empty")]
    EmptySeries(String),
    #[error("duplicate series name `{0}`")]
    DuplicateSeries(String),
    #[error("invalid range: start is after end")]
    InvalidRange,
    #[error("categorical dictionary: {0}")]
    BadCategorical(String),

    #[error("window must be positive")]
    NonPositiveWindow,
    #[error("stride must be positive")]
    NonPositiveStride,
    #[error("series spans do not intersect")]
    DisjointSpans,
    #[error("cannot parse delta `{0}`")]
    BadDelta(String),

    #[error("feature output `{column}` is already registered")]
    DuplicateFeature { column: String },
    #[error("invalid feature descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("`{0}` must contain at least one entry")]
    EmptyAxis(&'static str),
    #[error("malformed feature column name `{0}`")]
    MalformedName(String),
    #[error("column `{0}` is not produced by the collection")]
    UnknownColumn(String),
    #[error("{}", unknown_series_msg(name, *step))]
    UnknownSeries { name: String, step: Option<usize> },
    #[error("feature `{func}` on `{series}` failed at segment {segment}: {message}")]
    FunctionFailure {
        func: String,
        series: String,
        segment: usize,
        message: String,
    },
    #[error("function `{func}`: output `{output}` is not float-typed, cannot fill with NaN")]
    NonFloatOutput { func: String, output: String },
    #[error("unknown built-in function `{0}`")]
    UnknownBuiltin(String),
    #[error("function `{func}`: bad parameter `{param}`: {reason}")]
    BadParam {
        func: String,
        param: String,
        reason: String,
    },
    #[error("function `{0}` has no registered name and cannot be serialized")]
    NotSerializable(String),

    #[error("step {step} (`{func}`) failed: {message}")]
    StepFailure {
        step: usize,
        func: String,
        message: String,
    },
    #[error("step {step} declares dynamic outputs; inputs cannot be resolved statically")]
    DynamicStepUnresolvable { step: usize },
    #[error("step {step}: output `{name}` produced by more than one selector entry")]
    DuplicateOutput { step: usize, name: String },

    #[error("bad chunk spec: {0}")]
    BadSpec(String),

    #[error("{}: row {row}: {message}", path.display())]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },
    #[error("{}: index decreases at row {row} (pass --sort to sort rows)", path.display())]
    UnsortedCsv { path: PathBuf, row: usize },
    #[error("duplicate column header `{0}`")]
    DuplicateHeader(String),
    #[error("config: {0}")]
    Config(String),
    #[error("allocation tracking is not installed as the global allocator")]
    TrackingUnavailable,

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn unknown_series_msg(name: &str, step: Option<usize>) -> String {
    match step {
        Some(step) => format!("step {step}: unknown series `{name}`"),
        None => format!("unknown series `{name}`"),
    }
}
