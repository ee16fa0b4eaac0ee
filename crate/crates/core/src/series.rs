//! Named, index-sorted series and non-copying views onto them.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::index::{check_kind, Delta, Index, IndexKind, IndexSlice, IndexValue};
use crate::values::{ValueColumn, ValueSlice};

/// Checks an identifier against the reservations of the feature naming
/// grammar: non-empty, no `__`, no `|`, no leading or trailing `_`.
pub fn validate_name(name: &str) -> Result<()> {
    if name.is_empty() {
        return Err(Error::EmptyName);
    }
    if name.contains("__") || name.contains('|') || name.starts_with('_') || name.ends_with('_')
    {
        return Err(Error::ReservedCharacterInName {
            name: name.to_string(),
        });
    }
    Ok(())
}

fn first_decrease(index: IndexSlice<'_>) -> Option<usize> {
    match index {
        IndexSlice::TimeNs(v) => v.windows(2).position(|w| w[1] < w[0]).map(|p| p + 1),
        IndexSlice::Numeric(v) => {
            if let Some(p) = v.iter().position(|x| x.is_nan()) {
                return Some(p);
            }
            v.windows(2).position(|w| w[1] < w[0]).map(|p| p + 1)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Series {
    name: String,
    index: Index,
    values: ValueColumn,
}

impl Series {
    /// Validates and adopts the given storage; the buffers are moved, not
    /// copied.
    pub fn new(
        name: impl Into<String>,
        index: impl Into<Index>,
        values: impl Into<ValueColumn>,
    ) -> Result<Series> {
        let name = name.into();
        let index = index.into();
        let values = values.into();
        validate_name(&name)?;
        if index.len() != values.len() {
            return Err(Error::LengthMismatch {
                name,
                index_len: index.len(),
                values_len: values.len(),
            });
        }
        if let Some(position) = first_decrease(index.as_slice()) {
            return Err(Error::NonMonotonicIndex { name, position });
        }
        Ok(Series {
            name,
            index,
            values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn index(&self) -> &Index {
        &self.index
    }

    pub fn values(&self) -> &ValueColumn {
        &self.values
    }

    pub fn kind(&self) -> IndexKind {
        self.index.kind()
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// A view covering the whole series.
    pub fn view(&self) -> SeriesView<'_> {
        SeriesView {
            series: self,
            lo: 0,
            hi: self.len(),
        }
    }

    /// Positions whose index lies in `[start, end)`.
    pub fn slice_range(&self, start: IndexValue, end: IndexValue) -> Result<SeriesView<'_>> {
        self.view().slice_range(start, end)
    }

    /// Median spacing between consecutive samples.
    pub fn infer_period(&self) -> Result<Delta> {
        self.view().infer_period()
    }

    /// Same storage under a different name.
    pub fn renamed(&self, name: impl Into<String>) -> Result<Series> {
        let name = name.into();
        validate_name(&name)?;
        Ok(Series {
            name,
            index: self.index.clone(),
            values: self.values.clone(),
        })
    }

    /// Copies the index and values into fresh buffers.
    pub fn deep_copy(&self) -> Series {
        Series {
            name: self.name.clone(),
            index: self.index.as_slice().to_owned(),
            values: self.values.as_slice().to_column(),
        }
    }

    /// Equality on names, index and value bit patterns.
    pub fn bitwise_eq(&self, other: &Series) -> bool {
        self.name == other.name && self.view().bitwise_eq(&other.view())
    }
}

/// Read-only window `[lo, hi)` onto a series. Never copies storage.
#[derive(Debug, Clone, Copy)]
pub struct SeriesView<'a> {
    series: &'a Series,
    lo: usize,
    hi: usize,
}

impl<'a> SeriesView<'a> {
    pub fn series(&self) -> &'a Series {
        self.series
    }

    pub fn name(&self) -> &'a str {
        &self.series.name
    }

    pub fn kind(&self) -> IndexKind {
        self.series.kind()
    }

    /// Positions in the source series.
    pub fn bounds(&self) -> (usize, usize) {
        (self.lo, self.hi)
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi == self.lo
    }

    pub fn index(&self) -> IndexSlice<'a> {
        match &self.series.index {
            Index::TimeNs(v) => IndexSlice::TimeNs(&v[self.lo..self.hi]),
            Index::Numeric(v) => IndexSlice::Numeric(&v[self.lo..self.hi]),
        }
    }

    pub fn values(&self) -> ValueSlice<'a> {
        self.series.values.as_slice().range(self.lo, self.hi)
    }

    /// Sub-view by positions relative to this view.
    pub fn subview(&self, lo: usize, hi: usize) -> SeriesView<'a> {
        assert!(lo <= hi && hi <= self.len(), "subview out of bounds");
        SeriesView {
            series: self.series,
            lo: self.lo + lo,
            hi: self.lo + hi,
        }
    }

    /// Left-closed, right-open index range `[start, end)`.
    pub fn slice_range(&self, start: IndexValue, end: IndexValue) -> Result<SeriesView<'a>> {
        check_kind(self.kind(), start.kind())?;
        check_kind(self.kind(), end.kind())?;
        if start > end {
            return Err(Error::InvalidRange);
        }
        let index = self.index();
        let lo = index.lower_bound(start, false)?;
        let hi = index.lower_bound(end, false)?;
        Ok(self.subview(lo, hi))
    }

    /// Closed index range `[start, end]`.
    pub fn slice_closed(&self, start: IndexValue, end: IndexValue) -> Result<SeriesView<'a>> {
        check_kind(self.kind(), start.kind())?;
        check_kind(self.kind(), end.kind())?;
        if start > end {
            return Err(Error::InvalidRange);
        }
        let index = self.index();
        let lo = index.lower_bound(start, false)?;
        let hi = index.lower_bound(end, true)?;
        Ok(self.subview(lo, hi))
    }

    pub fn first_index(&self) -> Option<IndexValue> {
        self.index().first()
    }

    pub fn last_index(&self) -> Option<IndexValue> {
        self.index().last()
    }

    pub fn infer_period(&self) -> Result<Delta> {
        if self.len() < 2 {
            return Err(Error::TooShort {
                name: self.name().to_string(),
                len: self.len(),
            });
        }
        Ok(match self.index() {
            IndexSlice::TimeNs(v) => {
                let mut diffs: Vec<i64> = v.windows(2).map(|w| w[1] - w[0]).collect();
                let n = diffs.len();
                let (_, &mut upper, _) = diffs.select_nth_unstable(n / 2);
                if n % 2 == 1 {
                    Delta::Time(upper)
                } else {
                    let lower = *diffs[..n / 2].iter().max().expect("n >= 2");
                    Delta::Time(lower + (upper - lower) / 2)
                }
            }
            IndexSlice::Numeric(v) => {
                let mut diffs: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
                let n = diffs.len();
                let (_, &mut upper, _) = diffs.select_nth_unstable_by(n / 2, f64::total_cmp);
                if n % 2 == 1 {
                    Delta::Numeric(upper)
                } else {
                    let lower = diffs[..n / 2].iter().copied().fold(f64::MIN, f64::max);
                    Delta::Numeric((lower + upper) / 2.0)
                }
            }
        })
    }

    /// Copies the viewed range into a standalone series.
    pub fn to_series(&self) -> Series {
        Series {
            name: self.series.name.clone(),
            index: self.index().to_owned(),
            values: self.values().to_column(),
        }
    }

    pub fn bitwise_eq(&self, other: &SeriesView<'_>) -> bool {
        let index_eq = match (self.index(), other.index()) {
            (IndexSlice::TimeNs(a), IndexSlice::TimeNs(b)) => a == b,
            (IndexSlice::Numeric(a), IndexSlice::Numeric(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => false,
        };
        index_eq && values_bitwise_eq(self.values(), other.values())
    }
}

fn values_bitwise_eq(a: ValueSlice<'_>, b: ValueSlice<'_>) -> bool {
    match (a, b) {
        (ValueSlice::F64(x), ValueSlice::F64(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits())
        }
        (ValueSlice::F32(x), ValueSlice::F32(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits())
        }
        (ValueSlice::I64(x), ValueSlice::I64(y)) => x == y,
        (ValueSlice::Bool(x), ValueSlice::Bool(y)) => x == y,
        (
            ValueSlice::Categorical {
                codes: ca,
                labels: la,
            },
            ValueSlice::Categorical {
                codes: cb,
                labels: lb,
            },
        ) => {
            ca.len() == cb.len()
                && ca
                    .iter()
                    .zip(cb)
                    .all(|(&p, &q)| la[p as usize] == lb[q as usize])
        }
        _ => false,
    }
}

/// Series keyed by their unique names.
#[derive(Debug, Clone, Default)]
pub struct SeriesSet {
    series: BTreeMap<String, Series>,
}

impl SeriesSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_series(series: impl IntoIterator<Item = Series>) -> Result<Self> {
        let mut set = Self::new();
        for s in series {
            set.insert(s)?;
        }
        Ok(set)
    }

    /// Fails on a duplicate name.
    pub fn insert(&mut self, series: Series) -> Result<()> {
        if self.series.contains_key(series.name()) {
            return Err(Error::DuplicateSeries(series.name().to_string()));
        }
        self.series.insert(series.name.clone(), series);
        Ok(())
    }

    /// Inserts or replaces; returns `true` when a series was replaced.
    pub fn upsert(&mut self, series: Series) -> bool {
        self.series.insert(series.name.clone(), series).is_some()
    }

    pub fn get(&self, name: &str) -> Option<&Series> {
        self.series.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.series.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Series> {
        self.series.values()
    }

    pub fn views(&self) -> ViewSet<'_> {
        ViewSet {
            views: self.series.iter().map(|(k, s)| (k.as_str(), s.view())).collect(),
        }
    }

    /// Bytes of index and value storage, counting shared buffers once.
    pub fn storage_bytes(&self) -> usize {
        let mut seen = HashSet::new();
        let mut total = 0;
        for s in self.series.values() {
            if seen.insert(s.index.storage_ptr()) {
                total += s.index.byte_len();
            }
            if seen.insert(s.values.storage_ptr()) {
                total += s.values.byte_len();
            }
        }
        total
    }

    pub fn deep_copy(&self) -> SeriesSet {
        SeriesSet {
            series: self
                .series
                .iter()
                .map(|(k, s)| (k.clone(), s.deep_copy()))
                .collect(),
        }
    }

    pub fn bitwise_eq(&self, other: &SeriesSet) -> bool {
        self.len() == other.len()
            && self
                .series
                .iter()
                .zip(&other.series)
                .all(|((ka, a), (kb, b))| ka == kb && a.bitwise_eq(b))
    }
}

/// Named views, the input shape of extraction. Built from a whole
/// [`SeriesSet`] or from chunk slices.
#[derive(Debug, Clone, Default)]
pub struct ViewSet<'a> {
    views: BTreeMap<&'a str, SeriesView<'a>>,
}

impl<'a> ViewSet<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, view: SeriesView<'a>) -> Result<()> {
        if self.views.insert(view.name(), view).is_some() {
            return Err(Error::DuplicateSeries(view.name().to_string()));
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<SeriesView<'a>> {
        self.views.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = SeriesView<'a>> + '_ {
        self.views.values().copied()
    }
}
