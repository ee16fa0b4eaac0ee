use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::{check_kind, Delta, Index, IndexKind, IndexValue};
use crate::segment::{intersect_spans, segment_positions, OutputPosition, SegmentGrid};
use crate::series::{SeriesSet, SeriesView, ViewSet};
use crate::values::ValueTag;

use super::collection::{FeatureCollection, GroupKey};
use super::matrix::{Column, FeatureMatrix};
use super::wrapper::FuncWrapper;

#[derive(Debug, Clone)]
pub struct ExtractOptions {
    /// Suppress sparsity warnings.
    pub approve_sparsity: bool,
    pub n_workers: usize,
    /// Append one JSON line per (group, function) to this file.
    pub log_path: Option<PathBuf>,
    pub output_position: OutputPosition,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            approve_sparsity: false,
            n_workers: 1,
            log_path: None,
            output_position: OutputPosition::End,
        }
    }
}

/// Timing of one function over all segments of one group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRecord {
    pub func: String,
    pub series: String,
    #[serde(serialize_with = "as_display")]
    pub window: Delta,
    #[serde(serialize_with = "as_display")]
    pub stride: Delta,
    pub n_segments: usize,
    pub duration_s: f64,
}

fn as_display<S: serde::Serializer>(d: &Delta, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(d)
}

/// Raised when a series' windows do not all hold the same number of
/// samples: a sign of gaps or irregular sampling the caller may not expect.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsityWarning {
    pub series: String,
    pub window: Delta,
    pub stride: Delta,
    pub span_begin: IndexValue,
    pub n_segments: usize,
    /// Most frequent per-window sample count (larger count on ties).
    pub modal_count: usize,
    /// Windows whose count differs from `modal_count`.
    pub n_deviating: usize,
}

impl fmt::Display for SparsityWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "series `{}` (w={}, s={}): {} of {} windows differ from the usual {} samples",
            self.series, self.window, self.stride, self.n_deviating, self.n_segments, self.modal_count
        )
    }
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub matrix: FeatureMatrix,
    pub logs: Vec<LogRecord>,
    pub warnings: Vec<SparsityWarning>,
}

struct PreparedGroup<'a, 'c> {
    key: &'c GroupKey,
    label: String,
    funcs: &'c [FuncWrapper],
    views: Vec<SeriesView<'a>>,
    grid: SegmentGrid,
    positions: Vec<Vec<(usize, usize)>>,
}

pub fn extract(
    set: &SeriesSet,
    collection: &FeatureCollection,
    options: &ExtractOptions,
) -> Result<Extraction> {
    extract_views(&set.views(), collection, options)
}

/// Like [`extract`] over views, e.g. the slices of one chunk.
pub fn extract_views(
    views: &ViewSet<'_>,
    collection: &FeatureCollection,
    options: &ExtractOptions,
) -> Result<Extraction> {
    extract_views_with(views, collection, options, &intersect_spans)
}

pub(crate) type SpanFn<'f> = dyn Fn(&[SeriesView<'_>]) -> Result<(IndexValue, IndexValue)> + 'f;

/// Extraction with a custom rule for the grid span of each group.
pub(crate) fn extract_views_with(
    views: &ViewSet<'_>,
    collection: &FeatureCollection,
    options: &ExtractOptions,
    span_of: &SpanFn<'_>,
) -> Result<Extraction> {
    if collection.is_empty() {
        return Err(Error::EmptyAxis("features"));
    }
    let groups = prepare(views, collection, options.output_position, span_of)?;
    let warnings = if options.approve_sparsity {
        Vec::new()
    } else {
        sparsity_warnings(&groups)
    };

    let work: Vec<(usize, usize)> = groups
        .iter()
        .enumerate()
        .flat_map(|(g, group)| (0..group.funcs.len()).map(move |f| (g, f)))
        .collect();
    let run = |&(g, f): &(usize, usize)| run_item(&groups[g], &groups[g].funcs[f]);
    let results: Vec<Result<(Vec<Column>, LogRecord)>> = if options.n_workers <= 1 {
        work.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.n_workers)
            .build()
            .map_err(std::io::Error::other)?;
        pool.install(|| work.par_iter().map(run).collect())
    };

    let mut per_group: Vec<Vec<Column>> = groups.iter().map(|_| Vec::new()).collect();
    let mut logs = Vec::with_capacity(work.len());
    for (&(g, _), result) in work.iter().zip(results) {
        let (columns, log) = result?;
        per_group[g].extend(columns);
        logs.push(log);
    }
    if let Some(path) = &options.log_path {
        append_log(path, &logs)?;
    }
    let matrix = merge(&groups, per_group)?;
    Ok(Extraction {
        matrix,
        logs,
        warnings,
    })
}

fn prepare<'a, 'c>(
    views: &ViewSet<'a>,
    collection: &'c FeatureCollection,
    position: OutputPosition,
    span_of: &SpanFn<'_>,
) -> Result<Vec<PreparedGroup<'a, 'c>>> {
    let mut kind: Option<IndexKind> = None;
    collection
        .groups()
        .map(|(key, funcs)| {
            let inputs: Vec<SeriesView<'a>> = key
                .series
                .iter()
                .map(|name| {
                    views.get(name).ok_or_else(|| Error::UnknownSeries {
                        name: name.clone(),
                        step: None,
                    })
                })
                .collect::<Result<_>>()?;
            let (begin, end) = span_of(&inputs)?;
            match kind {
                Some(k) => check_kind(k, begin.kind())?,
                None => kind = Some(begin.kind()),
            }
            let grid = SegmentGrid::build(begin, end, key.window, key.stride, position)?;
            let positions = inputs
                .iter()
                .map(|v| segment_positions(v, &grid))
                .collect::<Result<_>>()?;
            Ok(PreparedGroup {
                key,
                label: key.series_label(),
                funcs,
                views: inputs,
                grid,
                positions,
            })
        })
        .collect()
}

fn sparsity_warnings(groups: &[PreparedGroup<'_, '_>]) -> Vec<SparsityWarning> {
    let mut out: Vec<SparsityWarning> = Vec::new();
    for group in groups {
        for (view, positions) in group.views.iter().zip(&group.positions) {
            let seen = out.iter().any(|w| {
                w.series == view.name()
                    && w.window == group.key.window
                    && w.stride == group.key.stride
                    && w.span_begin == group.grid.span_begin()
            });
            if seen || positions.is_empty() {
                continue;
            }
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for &(lo, hi) in positions {
                *counts.entry(hi - lo).or_default() += 1;
            }
            // Iterating ascending with >= keeps the larger count on ties.
            let mut modal = (0, 0);
            for (&count, &freq) in &counts {
                if freq >= modal.1 {
                    modal = (count, freq);
                }
            }
            if counts.len() > 1 {
                out.push(SparsityWarning {
                    series: view.name().to_string(),
                    window: group.key.window,
                    stride: group.key.stride,
                    span_begin: group.grid.span_begin(),
                    n_segments: positions.len(),
                    modal_count: modal.0,
                    n_deviating: positions.len() - modal.1,
                });
            }
        }
    }
    out
}

fn run_item(group: &PreparedGroup<'_, '_>, func: &FuncWrapper) -> Result<(Vec<Column>, LogRecord)> {
    let started = Instant::now();
    let n = group.grid.n_segments();
    let tags: Vec<ValueTag> = func.resolve_output_tags(group.views[0].values().tag())?;
    let mut columns: Vec<Column> = tags.iter().map(|&t| Column::with_capacity(t, n)).collect();
    let failure = |k: usize, message: String| Error::FunctionFailure {
        func: func.base_name().to_string(),
        series: group.label.clone(),
        segment: k,
        message,
    };
    let mut window: Vec<SeriesView<'_>> = group.views.clone();
    for k in 0..n {
        for (slot, (view, positions)) in window.iter_mut().zip(group.views.iter().zip(&group.positions)) {
            let (lo, hi) = positions[k];
            *slot = view.subview(lo, hi);
        }
        let outputs = func.call(&window).map_err(|m| failure(k, m))?;
        for ((column, value), name) in columns.iter_mut().zip(outputs).zip(func.output_names()) {
            column
                .push(value)
                .map_err(|m| failure(k, format!("output `{name}` {m}")))?;
        }
    }
    let log = LogRecord {
        func: func.base_name().to_string(),
        series: group.label.clone(),
        window: group.key.window,
        stride: group.key.stride,
        n_segments: n,
        duration_s: started.elapsed().as_secs_f64(),
    };
    Ok((columns, log))
}

fn append_log(path: &PathBuf, logs: &[LogRecord]) -> Result<()> {
    let file = File::options().create(true).append(true).open(path)?;
    let mut out = BufWriter::new(file);
    for record in logs {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Outer join of every group's rows on the output index.
fn merge(groups: &[PreparedGroup<'_, '_>], per_group: Vec<Vec<Column>>) -> Result<FeatureMatrix> {
    let labels: Vec<Vec<IndexValue>> = groups
        .iter()
        .map(|g| (0..g.grid.n_segments()).map(|k| g.grid.output_index(k)).collect())
        .collect();
    let kind = groups[0].grid.kind();
    let (index, group_rows): (Index, Vec<Vec<usize>>) = match kind {
        IndexKind::TimeNs => {
            let keys: Vec<Vec<i64>> = labels
                .iter()
                .map(|l| {
                    l.iter()
                        .map(|v| match v {
                            IndexValue::Time(t) => *t,
                            IndexValue::Numeric(_) => unreachable!("kinds checked"),
                        })
                        .collect()
                })
                .collect();
            let mut union: Vec<i64> = keys.iter().flatten().copied().collect();
            union.sort_unstable();
            union.dedup();
            let rows = keys
                .iter()
                .map(|k| k.iter().map(|t| union.binary_search(t).expect("in union")).collect())
                .collect();
            (Index::from(union), rows)
        }
        IndexKind::Numeric => {
            let keys: Vec<Vec<f64>> = labels
                .iter()
                .map(|l| {
                    l.iter()
                        .map(|v| match v {
                            IndexValue::Numeric(x) => *x,
                            IndexValue::Time(_) => unreachable!("kinds checked"),
                        })
                        .collect()
                })
                .collect();
            let mut union: Vec<f64> = keys.iter().flatten().copied().collect();
            union.sort_unstable_by(f64::total_cmp);
            union.dedup_by(|a, b| a.to_bits() == b.to_bits());
            let rows = keys
                .iter()
                .map(|k| {
                    k.iter()
                        .map(|x| union.binary_search_by(|u| u.total_cmp(x)).expect("in union"))
                        .collect()
                })
                .collect();
            (Index::from(union), rows)
        }
    };
    let n_rows = index.len();

    let mut columns = IndexMap::new();
    let mut column_groups = Vec::new();
    for (g, (group, cols)) in groups.iter().zip(per_group).enumerate() {
        let names = group
            .funcs
            .iter()
            .flat_map(|f| f.output_names().iter());
        let rows: &Vec<usize> = &group_rows[g];
        for (name, col) in names.zip(cols) {
            let mut full = Column::missing(col.tag(), n_rows);
            full.scatter(rows, col);
            let column_name = group.key.column_name(name)?;
            if columns.insert(column_name.clone(), full).is_some() {
                return Err(Error::DuplicateFeature { column: column_name });
            }
            column_groups.push(g);
        }
    }
    Ok(FeatureMatrix::new(index, columns, column_groups, group_rows))
}

/// Per-function totals over a set of log records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogSummary {
    pub func: String,
    pub total_s: f64,
    pub mean_s: f64,
    pub calls: usize,
}

/// Sums and means of durations per function name, sorted by name.
pub fn aggregate_log(records: &[LogRecord]) -> Vec<LogSummary> {
    let mut by_func: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for r in records {
        let entry = by_func.entry(&r.func).or_default();
        entry.0 += r.duration_s;
        entry.1 += 1;
    }
    by_func
        .into_iter()
        .map(|(func, (total_s, calls))| LogSummary {
            func: func.to_string(),
            total_s,
            mean_s: total_s / calls as f64,
            calls,
        })
        .collect()
}
