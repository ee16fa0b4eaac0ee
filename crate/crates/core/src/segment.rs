//! Strided-rolling windows in index units.
//!
//! Segment `k` of a grid covers `[begin + k·stride, begin + k·stride + window)`.
//! Only complete windows are generated: a segment exists only while its end
//! does not pass the last observed index value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{check_kind, Delta, IndexKind, IndexSlice, IndexValue};
use crate::series::SeriesView;

/// Which end of a window labels its output row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputPosition {
    Begin,
    #[default]
    End,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentGrid {
    span_begin: IndexValue,
    window: Delta,
    stride: Delta,
    n_segments: usize,
    output_position: OutputPosition,
}

impl SegmentGrid {
    pub fn build(
        span_begin: IndexValue,
        span_end: IndexValue,
        window: Delta,
        stride: Delta,
        output_position: OutputPosition,
    ) -> Result<SegmentGrid> {
        let kind = span_begin.kind();
        check_kind(kind, span_end.kind())?;
        check_kind(kind, window.kind())?;
        check_kind(kind, stride.kind())?;
        if !window.is_positive() {
            return Err(Error::NonPositiveWindow);
        }
        if !stride.is_positive() {
            return Err(Error::NonPositiveStride);
        }
        if span_begin > span_end {
            return Err(Error::InvalidRange);
        }
        let n_segments = match (span_begin, span_end, window, stride) {
            (IndexValue::Time(b), IndexValue::Time(e), Delta::Time(w), Delta::Time(s)) => {
                let span = e - b;
                if span < w {
                    0
                } else {
                    ((span - w) / s + 1) as usize
                }
            }
            (IndexValue::Numeric(b), IndexValue::Numeric(e), Delta::Numeric(w), Delta::Numeric(s)) => {
                numeric_count(b, e, w, s)
            }
            _ => unreachable!("kinds checked above"),
        };
        Ok(SegmentGrid {
            span_begin,
            window,
            stride,
            n_segments,
            output_position,
        })
    }

    pub fn kind(&self) -> IndexKind {
        self.span_begin.kind()
    }

    pub fn n_segments(&self) -> usize {
        self.n_segments
    }

    pub fn is_empty(&self) -> bool {
        self.n_segments == 0
    }

    pub fn window(&self) -> Delta {
        self.window
    }

    pub fn stride(&self) -> Delta {
        self.stride
    }

    pub fn span_begin(&self) -> IndexValue {
        self.span_begin
    }

    pub fn output_position(&self) -> OutputPosition {
        self.output_position
    }

    /// Start of segment `k`, computed by one multiply-add.
    pub fn start(&self, k: usize) -> IndexValue {
        match (self.span_begin, self.stride) {
            (IndexValue::Time(b), Delta::Time(s)) => IndexValue::Time(b + k as i64 * s),
            (IndexValue::Numeric(b), Delta::Numeric(s)) => IndexValue::Numeric(b + k as f64 * s),
            _ => unreachable!(),
        }
    }

    /// Exclusive end of segment `k`.
    pub fn end(&self, k: usize) -> IndexValue {
        match (self.start(k), self.window) {
            (IndexValue::Time(t), Delta::Time(w)) => IndexValue::Time(t + w),
            (IndexValue::Numeric(x), Delta::Numeric(w)) => IndexValue::Numeric(x + w),
            _ => unreachable!(),
        }
    }

    /// The index value labelling segment `k` in the feature matrix.
    pub fn output_index(&self, k: usize) -> IndexValue {
        match self.output_position {
            OutputPosition::Begin => self.start(k),
            OutputPosition::End => self.end(k),
        }
    }
}

fn numeric_count(begin: f64, end: f64, window: f64, stride: f64) -> usize {
    let fits = |k: usize| begin + k as f64 * stride + window <= end;
    let estimate = ((end - begin - window) / stride).floor();
    if estimate.is_nan() || estimate < 0.0 {
        return usize::from(fits(0));
    }
    // The closed form can be off by one after rounding; settle on the exact
    // predicate used for the window ends.
    let mut n = estimate as usize + 1;
    while n > 0 && !fits(n - 1) {
        n -= 1;
    }
    while fits(n) {
        n += 1;
    }
    n
}

/// Sample positions `(lo, hi)` of every grid segment inside `view`,
/// relative to the view. Two-pointer sweep, `O(len + n_segments)`.
pub fn segment_positions(view: &SeriesView<'_>, grid: &SegmentGrid) -> Result<Vec<(usize, usize)>> {
    check_kind(grid.kind(), view.kind())?;
    let n = grid.n_segments();
    Ok(match (view.index(), grid.span_begin, grid.window, grid.stride) {
        (IndexSlice::TimeNs(idx), IndexValue::Time(b), Delta::Time(w), Delta::Time(s)) => sweep(
            idx,
            n,
            |k| b + k as i64 * s,
            |k| b + k as i64 * s + w,
        ),
        (IndexSlice::Numeric(idx), IndexValue::Numeric(b), Delta::Numeric(w), Delta::Numeric(s)) => {
            sweep(idx, n, |k| b + k as f64 * s, |k| b + k as f64 * s + w)
        }
        _ => unreachable!("kinds checked above"),
    })
}

fn sweep<T: PartialOrd + Copy>(
    idx: &[T],
    n: usize,
    start: impl Fn(usize) -> T,
    end: impl Fn(usize) -> T,
) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n);
    let (mut lo, mut hi) = (0usize, 0usize);
    for k in 0..n {
        let (a, b) = (start(k), end(k));
        while lo < idx.len() && idx[lo] < a {
            lo += 1;
        }
        if hi < lo {
            hi = lo;
        }
        while hi < idx.len() && idx[hi] < b {
            hi += 1;
        }
        out.push((lo, hi));
    }
    out
}

/// Same result as [`segment_positions`] by binary search per segment,
/// `O(n_segments · log len)`.
pub fn segment_positions_bisect(
    view: &SeriesView<'_>,
    grid: &SegmentGrid,
) -> Result<Vec<(usize, usize)>> {
    check_kind(grid.kind(), view.kind())?;
    let index = view.index();
    (0..grid.n_segments())
        .map(|k| {
            let lo = index.lower_bound(grid.start(k), false)?;
            let hi = index.lower_bound(grid.end(k), false)?;
            Ok((lo, hi))
        })
        .collect()
}

/// The index range observed by every view: latest first value to earliest
/// last value.
pub fn intersect_spans(views: &[SeriesView<'_>]) -> Result<(IndexValue, IndexValue)> {
    let first = views.first().ok_or(Error::EmptyAxis("series"))?;
    let kind = first.kind();
    let mut span: Option<(IndexValue, IndexValue)> = None;
    for view in views {
        check_kind(kind, view.kind())?;
        let (Some(a), Some(b)) = (view.first_index(), view.last_index()) else {
            return Err(Error::EmptySeries(view.name().to_string()));
        };
        span = Some(match span {
            None => (a, b),
            Some((lo, hi)) => (
                if a > lo { a } else { lo },
                if b < hi { b } else { hi },
            ),
        });
    }
    let (lo, hi) = span.expect("at least one view");
    if lo > hi {
        return Err(Error::DisjointSpans);
    }
    Ok((lo, hi))
}
