//! Strided-window processing and feature extraction for multivariate,
//! irregularly sampled time series.
//!
//! Windows and strides are expressed in the unit of the sequence index
//! (`30s` on a time index, `0.5` on a numeric one), so series with different
//! sampling rates, gaps and empty windows are handled without resampling.
//! Windows are views into the source buffers; extraction never copies input
//! values.

pub mod bench;
pub mod chunking;
pub mod error;
pub mod feature;
pub mod index;
pub mod io;
pub mod memtrack;
pub mod params;
pub mod processing;
pub mod segment;
pub mod series;
pub mod values;

pub use chunking::{chunk_series, chunk_set, extract_chunk, ChunkGroup, ChunkRange, ChunkSpec};
pub use error::{Error, Result};
pub use feature::{
    builtin, extract, make_robust, ExtractOptions, FeatureCollection, FeatureDescriptor,
    FeatureMatrix, FuncWrapper,
};
pub use index::{Delta, Index, IndexKind, IndexSlice, IndexValue};
pub use segment::{intersect_spans, segment_positions, OutputPosition, SegmentGrid};
pub use params::{ParamValue, Params};
pub use processing::{builtin_step, Pipeline, ProcessorStep, Selector, StepOutput};
pub use series::{Series, SeriesSet, SeriesView, ViewSet};
pub use values::{Categorical, Scalar, ValueColumn, ValueSlice, ValueTag};

#[cfg(test)]
#[global_allocator]
static TEST_ALLOC: memtrack::TrackingAllocator = memtrack::TrackingAllocator;
