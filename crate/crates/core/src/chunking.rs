//! Gap-aware chunking.
//!
//! A series is split wherever two consecutive samples lie more than
//! `gap_factor` median periods apart. Chunks shorter than `min_chunk_dur`
//! are dropped and chunks longer than `max_chunk_dur` are cut into pieces,
//! each extended backwards by `sub_chunk_overlap`. Across several series,
//! overlapping chunks are merged into one [`ChunkGroup`] so that series
//! observed together are processed together.
//!
//! With `sub_chunk_overlap = window − stride` and a `max_chunk_dur` that is a
//! multiple of the stride, [`extract_chunk`] over every group yields the
//! same rows as one extraction over the whole data.

use crate::error::{Error, Result};
use crate::feature::{extract_views_with, ExtractOptions, Extraction, FeatureCollection};
use crate::index::{check_kind, Delta, IndexKind, IndexSlice, IndexValue};
use crate::series::{SeriesSet, SeriesView, ViewSet};

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkSpec {
    pub gap_factor: f64,
    pub min_chunk_dur: Option<Delta>,
    pub max_chunk_dur: Option<Delta>,
    pub sub_chunk_overlap: Option<Delta>,
}

impl Default for ChunkSpec {
    fn default() -> Self {
        ChunkSpec {
            gap_factor: 4.0,
            min_chunk_dur: None,
            max_chunk_dur: None,
            sub_chunk_overlap: None,
        }
    }
}

impl ChunkSpec {
    pub fn validate(&self, kind: IndexKind) -> Result<()> {
        if !(self.gap_factor > 1.0 && self.gap_factor.is_finite()) {
            return Err(Error::BadSpec(format!(
                "gap_factor must be a finite number above 1, got {}",
                self.gap_factor
            )));
        }
        for d in [self.min_chunk_dur, self.max_chunk_dur, self.sub_chunk_overlap]
            .into_iter()
            .flatten()
        {
            check_kind(kind, d.kind())?;
            if d.as_f64() < 0.0 {
                return Err(Error::BadSpec(format!("negative duration {d}")));
            }
        }
        if let Some(max) = self.max_chunk_dur {
            if !max.is_positive() {
                return Err(Error::BadSpec("max_chunk_dur must be positive".to_string()));
            }
            if let Some(overlap) = self.sub_chunk_overlap {
                if overlap >= max {
                    return Err(Error::BadSpec(format!(
                        "sub_chunk_overlap {overlap} must be below max_chunk_dur {max}"
                    )));
                }
            }
        } else if self.sub_chunk_overlap.is_some_and(|o| !o.is_zero()) {
            return Err(Error::BadSpec(
                "sub_chunk_overlap needs max_chunk_dur".to_string(),
            ));
        }
        Ok(())
    }
}

/// An index range. Gap-delimited chunks and the final piece of a cut chunk
/// include their end; the other pieces stop just before the next one
/// starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChunkRange {
    pub begin: IndexValue,
    pub end: IndexValue,
    pub closed_end: bool,
}

impl ChunkRange {
    fn closed(begin: IndexValue, end: IndexValue) -> Self {
        ChunkRange {
            begin,
            end,
            closed_end: true,
        }
    }

    pub fn duration(&self) -> Delta {
        self.end.since(self.begin).expect("range ends share a kind")
    }

    pub fn slice<'a>(&self, view: &SeriesView<'a>) -> Result<SeriesView<'a>> {
        if self.closed_end {
            view.slice_closed(self.begin, self.end)
        } else {
            view.slice_range(self.begin, self.end)
        }
    }
}

/// Series slices sharing one range.
#[derive(Debug, Clone)]
pub struct ChunkGroup<'a> {
    pub range: ChunkRange,
    pub slices: Vec<SeriesView<'a>>,
}

impl<'a> ChunkGroup<'a> {
    pub fn views(&self) -> ViewSet<'a> {
        let mut set = ViewSet::new();
        for s in &self.slices {
            set.insert(*s).expect("one slice per series");
        }
        set
    }
}

/// Chunk ranges of one series.
pub fn chunk_series(view: &SeriesView<'_>, spec: &ChunkSpec) -> Result<Vec<ChunkRange>> {
    spec.validate(view.kind())?;
    let overlap = spec.sub_chunk_overlap.unwrap_or(Delta::zero(view.kind()));
    Ok(gap_chunks(view, spec)?
        .into_iter()
        .flat_map(|r| cut(r, spec.max_chunk_dur, overlap))
        .collect())
}

/// Splits at gaps and drops short chunks; no cutting.
fn gap_chunks(view: &SeriesView<'_>, spec: &ChunkSpec) -> Result<Vec<ChunkRange>> {
    let index = view.index();
    let n = index.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut bounds: Vec<(usize, usize)> = Vec::new();
    if n == 1 {
        bounds.push((0, 0));
    } else {
        let threshold = spec.gap_factor
            * match view.infer_period()? {
                Delta::Time(ns) => ns as f64,
                Delta::Numeric(x) => x,
            };
        let diff = |i: usize| match index {
            IndexSlice::TimeNs(t) => (t[i + 1] - t[i]) as f64,
            IndexSlice::Numeric(x) => x[i + 1] - x[i],
        };
        let mut start = 0;
        for i in 0..n - 1 {
            if diff(i) > threshold {
                bounds.push((start, i));
                start = i + 1;
            }
        }
        bounds.push((start, n - 1));
    }
    let get = |i: usize| index.get(i).expect("position in bounds");
    Ok(bounds
        .into_iter()
        .map(|(a, b)| ChunkRange::closed(get(a), get(b)))
        .filter(|r| spec.min_chunk_dur.is_none_or(|min| r.duration() >= min))
        .collect())
}

/// Cuts a closed range into pieces of at most `max`, each but the first
/// reaching back `overlap` before its nominal start.
fn cut(range: ChunkRange, max: Option<Delta>, overlap: Delta) -> Vec<ChunkRange> {
    let Some(max) = max else {
        return vec![range];
    };
    let pieces = match (range.duration(), max) {
        (Delta::Time(d), Delta::Time(m)) => (d + m - 1) / m,
        (Delta::Numeric(d), Delta::Numeric(m)) => (d / m).ceil() as i64,
        _ => unreachable!("kinds validated"),
    }
    .max(1) as usize;
    let at = |k: usize| match (range.begin, max) {
        (IndexValue::Time(b), Delta::Time(m)) => IndexValue::Time(b + k as i64 * m),
        (IndexValue::Numeric(b), Delta::Numeric(m)) => IndexValue::Numeric(b + k as f64 * m),
        _ => unreachable!("kinds validated"),
    };
    (0..pieces)
        .map(|k| {
            let nominal = at(k);
            let back = match (nominal, overlap) {
                (IndexValue::Time(t), Delta::Time(o)) => IndexValue::Time(t - o),
                (IndexValue::Numeric(x), Delta::Numeric(o)) => IndexValue::Numeric(x - o),
                _ => unreachable!("kinds validated"),
            };
            let begin = if back < range.begin { range.begin } else { back };
            if k + 1 == pieces {
                ChunkRange::closed(begin, range.end)
            } else {
                ChunkRange {
                    begin,
                    end: at(k + 1),
                    closed_end: false,
                }
            }
        })
        .collect()
}

/// Chunks every series, merges overlapping chunks across series into
/// groups, then cuts each group to `max_chunk_dur`. Groups come out sorted
/// by start; empty slices are left out.
pub fn chunk_set<'a>(set: &'a SeriesSet, spec: &ChunkSpec) -> Result<Vec<ChunkGroup<'a>>> {
    let views: Vec<SeriesView<'a>> = set.iter().map(|s| s.view()).collect();
    let Some(first) = views.first() else {
        return Ok(Vec::new());
    };
    let kind = first.kind();
    spec.validate(kind)?;
    let mut ranges: Vec<ChunkRange> = Vec::new();
    for v in &views {
        check_kind(kind, v.kind())?;
        ranges.extend(gap_chunks(v, spec)?);
    }
    ranges.sort_by(|a, b| a.begin.partial_cmp(&b.begin).expect("index values are ordered"));

    let mut components: Vec<ChunkRange> = Vec::new();
    for r in ranges {
        match components.last_mut() {
            Some(c) if r.begin <= c.end => {
                if r.end > c.end {
                    c.end = r.end;
                }
            }
            _ => components.push(r),
        }
    }

    let overlap = spec.sub_chunk_overlap.unwrap_or(Delta::zero(kind));
    let mut groups = Vec::new();
    for component in components {
        for range in cut(component, spec.max_chunk_dur, overlap) {
            let slices = views
                .iter()
                .map(|v| range.slice(v))
                .filter(|s| !matches!(s, Ok(s) if s.is_empty()))
                .collect::<Result<Vec<_>>>()?;
            if !slices.is_empty() {
                groups.push(ChunkGroup { range, slices });
            }
        }
    }
    Ok(groups)
}

/// Feature extraction restricted to one chunk group.
///
/// A window counts as complete when the data continues up to its end: up to
/// the last sample in the slice, or up to the range end when the series goes
/// on past an open-ended piece.
pub fn extract_chunk(
    group: &ChunkGroup<'_>,
    collection: &FeatureCollection,
    options: &ExtractOptions,
) -> Result<Extraction> {
    let range = group.range;
    let span_of = move |views: &[SeriesView<'_>]| -> Result<(IndexValue, IndexValue)> {
        let mut span: Option<(IndexValue, IndexValue)> = None;
        for v in views {
            let (Some(first), Some(last)) = (v.first_index(), v.last_index()) else {
                return Err(Error::EmptySeries(v.name().to_string()));
            };
            let continues = v.bounds().1 < v.series().len();
            let end = if !range.closed_end && continues { range.end } else { last };
            span = Some(match span {
                None => (first, end),
                Some((a, b)) => (
                    if first > a { first } else { a },
                    if end < b { end } else { b },
                ),
            });
        }
        match span {
            Some((a, b)) if a <= b => Ok((a, b)),
            Some(_) => Err(Error::DisjointSpans),
            None => Err(Error::EmptyAxis("series")),
        }
    };
    extract_views_with(&group.views(), collection, options, &span_of)
}
