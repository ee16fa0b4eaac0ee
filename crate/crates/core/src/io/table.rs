//! CSV ingestion and output.
//!
//! Input: a header row, one index column (RFC 3339 timestamps or decimal
//! numbers) and any number of value columns, each becoming one series. Value
//! types are inferred per column unless given: all integers give i64, all
//! numbers give f64 (empty cells read as NaN), `true`/`false` give bool,
//! anything else is categorical.
//!
//! Output: the index first (RFC 3339 with `Z` for time, shortest round-trip
//! decimal for numeric), then one column per series or feature. Missing
//! cells and NaN are written as empty fields.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat};

use crate::error::{Error, Result};
use crate::feature::{Column, FeatureMatrix};
use crate::index::{Index, IndexKind, IndexSlice};
use crate::series::{Series, SeriesView};
use crate::values::{Categorical, ValueColumn, ValueSlice, ValueTag};

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Header of the index column; the first column when unset.
    pub index_column: Option<String>,
    /// Index kind; inferred from the first row when unset.
    pub kind: Option<IndexKind>,
    /// Sort rows by index instead of rejecting unsorted files.
    pub sort: bool,
    /// Value types by column header, overriding inference.
    pub column_types: BTreeMap<String, ValueTag>,
}

pub fn parse_timestamp(text: &str) -> Option<i64> {
    DateTime::parse_from_rfc3339(text.trim()).ok()?.timestamp_nanos_opt()
}

pub fn format_timestamp(ns: i64) -> String {
    DateTime::from_timestamp_nanos(ns).to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Loads every non-index column of `path` as a series. All series share
/// one index buffer.
pub fn load_csv(path: &Path, options: &LoadOptions) -> Result<Vec<Series>> {
    let parse_err = |row: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        row,
        message,
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut seen = HashSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(Error::DuplicateHeader(h.clone()));
        }
    }
    let index_pos = match &options.index_column {
        Some(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.clone()))?,
        None if headers.is_empty() => return Err(parse_err(0, "no columns".to_string())),
        None => 0,
    };

    let mut raw_index: Vec<String> = Vec::new();
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(parse_err(
                i + 1,
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        for (c, field) in record.iter().enumerate() {
            if c == index_pos {
                raw_index.push(field.trim().to_string());
            } else {
                cells[c].push(field.to_string());
            }
        }
    }

    let kind = match options.kind {
        Some(k) => k,
        None => match raw_index.first() {
            Some(first) if first.parse::<f64>().is_ok() => IndexKind::Numeric,
            _ => IndexKind::TimeNs,
        },
    };
    let (index, order) = match kind {
        IndexKind::TimeNs => {
            let ts = raw_index
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    parse_timestamp(t)
                        .ok_or_else(|| parse_err(i + 1, format!("`{t}` is not an RFC 3339 timestamp")))
                })
                .collect::<Result<Vec<i64>>>()?;
            let (ts, perm) = ensure_sorted(ts, |a, b| a.cmp(b), options.sort, path)?;
            (Index::from(ts), perm)
        }
        IndexKind::Numeric => {
            let xs = raw_index
                .iter()
                .enumerate()
                .map(|(i, t)| match t.parse::<f64>() {
                    Ok(x) if !x.is_nan() => Ok(x),
                    _ => Err(parse_err(i + 1, format!("`{t}` is not a number"))),
                })
                .collect::<Result<Vec<f64>>>()?;
            let (xs, perm) = ensure_sorted(xs, |a, b| a.total_cmp(b), options.sort, path)?;
            (Index::from(xs), perm)
        }
    };

    let mut out = Vec::with_capacity(headers.len().saturating_sub(1));
    for (c, header) in headers.iter().enumerate() {
        if c == index_pos {
            continue;
        }
        let mut column = std::mem::take(&mut cells[c]);
        if let Some(perm) = &order {
            column = perm.iter().map(|&p| std::mem::take(&mut column[p])).collect();
        }
        let values = match options.column_types.get(header) {
            Some(&tag) => parse_typed(&column, tag).map_err(|(row, m)| {
                // Report the row as it appears in the file.
                let row = order.as_ref().map_or(row, |p| p[row]);
                parse_err(row + 1, format!("column `{header}`: {m}"))
            })?,
            None => infer(&column),
        };
        out.push(Series::new(header.clone(), index.clone(), values)?);
    }
    Ok(out)
}

/// Passes sorted input through. Unsorted input is an error naming the
/// first decreasing data row, or is stably sorted when `sort` is set.
fn ensure_sorted<T: Copy>(
    values: Vec<T>,
    cmp: impl Fn(&T, &T) -> std::cmp::Ordering,
    sort: bool,
    path: &Path,
) -> Result<(Vec<T>, Option<Vec<usize>>)> {
    let Some(bad) = values.windows(2).position(|w| cmp(&w[0], &w[1]).is_gt()) else {
        return Ok((values, None));
    };
    if !sort {
        return Err(Error::UnsortedCsv {
            path: path.to_path_buf(),
            row: bad + 2,
        });
    }
    let mut perm: Vec<usize> = (0..values.len()).collect();
    perm.sort_by(|&a, &b| cmp(&values[a], &values[b]));
    Ok((perm.iter().map(|&p| values[p]).collect(), Some(perm)))
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" => Some(true),
        "false" => Some(false),
        _ => None,
    }
}

fn parse_i64(s: &str) -> Option<i64> {
    s.trim().parse().ok()
}

fn parse_f64(s: &str) -> Option<f64> {
    let s = s.trim();
    if s.is_empty() {
        Some(f64::NAN)
    } else {
        s.parse().ok()
    }
}

fn infer(cells: &[String]) -> ValueColumn {
    if let Some(v) = cells.iter().map(|s| parse_i64(s)).collect::<Option<Vec<_>>>() {
        return v.into();
    }
    if let Some(v) = cells.iter().map(|s| parse_f64(s)).collect::<Option<Vec<_>>>() {
        return v.into();
    }
    if let Some(v) = cells.iter().map(|s| parse_bool(s)).collect::<Option<Vec<_>>>() {
        return v.into();
    }
    Categorical::encode(cells.iter().map(String::as_str)).into()
}

fn parse_typed(cells: &[String], tag: ValueTag) -> std::result::Result<ValueColumn, (usize, String)> {
    fn all<T>(
        cells: &[String],
        what: &str,
        f: impl Fn(&str) -> Option<T>,
    ) -> std::result::Result<Vec<T>, (usize, String)> {
        cells
            .iter()
            .enumerate()
            .map(|(i, s)| f(s).ok_or_else(|| (i, format!("`{s}` is not {what}"))))
            .collect()
    }
    Ok(match tag {
        ValueTag::F64 => all(cells, "a number", parse_f64)?.into(),
        ValueTag::F32 => all(cells, "a number", |s| parse_f64(s).map(|x| x as f32))?.into(),
        ValueTag::I64 => all(cells, "an integer", parse_i64)?.into(),
        ValueTag::Bool => all(cells, "true or false", parse_bool)?.into(),
        ValueTag::Categorical => Categorical::encode(cells.iter().map(String::as_str)).into(),
    })
}

fn index_cell(index: &IndexSlice<'_>, i: usize) -> String {
    match index {
        IndexSlice::TimeNs(t) => format_timestamp(t[i]),
        IndexSlice::Numeric(x) => format!("{}", x[i]),
    }
}

fn float_cell<T: std::fmt::Debug + Copy>(x: T, is_nan: bool) -> String {
    if is_nan {
        String::new()
    } else {
        format!("{x:?}")
    }
}

fn value_cell(values: &ValueSlice<'_>, i: usize) -> String {
    match values {
        ValueSlice::F64(v) => float_cell(v[i], v[i].is_nan()),
        ValueSlice::F32(v) => float_cell(v[i], v[i].is_nan()),
        ValueSlice::I64(v) => v[i].to_string(),
        ValueSlice::Bool(v) => v[i].to_string(),
        ValueSlice::Categorical { codes, labels } => labels[codes[i] as usize].clone(),
    }
}

fn matrix_cell(column: &Column, i: usize) -> String {
    match column {
        Column::F64(v) => float_cell(v[i], v[i].is_nan()),
        Column::F32(v) => float_cell(v[i], v[i].is_nan()),
        Column::I64(v) => v[i].map_or(String::new(), |x| x.to_string()),
        Column::Bool(v) => v[i].map_or(String::new(), |x| x.to_string()),
        Column::Categorical(v) => v[i].clone().unwrap_or_default(),
    }
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

/// Writes a feature matrix: `index` followed by the feature columns.
pub fn write_matrix(matrix: &FeatureMatrix, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["index"];
    header.extend(matrix.column_names());
    w.write_record(&header)?;
    let index = matrix.index().as_slice();
    let columns: Vec<&Column> = matrix.columns().map(|(_, c)| c).collect();
    let mut row: Vec<String> = Vec::with_capacity(columns.len() + 1);
    for i in 0..matrix.n_rows() {
        row.clear();
        row.push(index_cell(&index, i));
        row.extend(columns.iter().map(|c| matrix_cell(c, i)));
        w.write_record(&row)?;
    }
    finish(w)
}

/// Writes one or more series sharing an index (checked) to one file.
pub fn write_series_csv(series: &[SeriesView<'_>], path: &Path) -> Result<()> {
    let first = series.first().ok_or(Error::EmptyAxis("series"))?;
    let index = first.index();
    for s in &series[1..] {
        if !same_index(&index, &s.index()) {
            return Err(Error::LengthMismatch {
                name: s.name().to_string(),
                index_len: index.len(),
                values_len: s.len(),
            });
        }
    }
    let mut w = writer(path)?;
    let mut header = vec!["index"];
    header.extend(series.iter().map(|s| s.name()));
    w.write_record(&header)?;
    let values: Vec<ValueSlice<'_>> = series.iter().map(|s| s.values()).collect();
    let mut row: Vec<String> = Vec::with_capacity(series.len() + 1);
    for i in 0..index.len() {
        row.clear();
        row.push(index_cell(&index, i));
        row.extend(values.iter().map(|v| value_cell(v, i)));
        w.write_record(&row)?;
    }
    finish(w)
}

fn same_index(a: &IndexSlice<'_>, b: &IndexSlice<'_>) -> bool {
    match (a, b) {
        (IndexSlice::TimeNs(x), IndexSlice::TimeNs(y)) => x == y,
        (IndexSlice::Numeric(x), IndexSlice::Numeric(y)) => {
            x.len() == y.len() && x.iter().zip(y.iter()).all(|(p, q)| p.to_bits() == q.to_bits())
        }
        _ => false,
    }
}

fn finish(w: csv::Writer<BufWriter<File>>) -> Result<()> {
    let mut inner = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    inner.flush()?;
    Ok(())
}

/// File name for a series written on its own.
pub fn series_file_name(name: &str) -> PathBuf {
    PathBuf::from(format!("{name}.csv"))
}
