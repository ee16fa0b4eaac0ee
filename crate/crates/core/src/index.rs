//! Sequence-index types.
//!
//! Every series carries either an integer-nanosecond time index or a
//! floating-point numeric index. Window and stride lengths are [`Delta`]s in
//! the same unit as the index they are applied to.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndexKind {
    /// Signed 64-bit nanoseconds since the Unix epoch.
    TimeNs,
    /// 64-bit float positions.
    Numeric,
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexKind::TimeNs => f.write_str("time"),
            IndexKind::Numeric => f.write_str("numeric"),
        }
    }
}

pub(crate) fn check_kind(expected: IndexKind, found: IndexKind) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::KindMismatch { expected, found })
    }
}

/// A single position on a sequence index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IndexValue {
    Time(i64),
    Numeric(f64),
}

impl IndexValue {
    pub fn kind(self) -> IndexKind {
        match self {
            IndexValue::Time(_) => IndexKind::TimeNs,
            IndexValue::Numeric(_) => IndexKind::Numeric,
        }
    }

    /// `self + delta`. Fails when the kinds differ.
    pub fn offset(self, delta: Delta) -> Result<IndexValue> {
        match (self, delta) {
            (IndexValue::Time(t), Delta::Time(d)) => Ok(IndexValue::Time(t + d)),
            (IndexValue::Numeric(x), Delta::Numeric(d)) => Ok(IndexValue::Numeric(x + d)),
            _ => Err(Error::KindMismatch {
                expected: self.kind(),
                found: delta.kind(),
            }),
        }
    }

    /// `self - earlier`. Fails when the kinds differ.
    pub fn since(self, earlier: IndexValue) -> Result<Delta> {
        match (self, earlier) {
            (IndexValue::Time(a), IndexValue::Time(b)) => Ok(Delta::Time(a - b)),
            (IndexValue::Numeric(a), IndexValue::Numeric(b)) => Ok(Delta::Numeric(a - b)),
            _ => Err(Error::KindMismatch {
                expected: self.kind(),
                found: earlier.kind(),
            }),
        }
    }
}

impl PartialOrd for IndexValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (IndexValue::Time(a), IndexValue::Time(b)) => a.partial_cmp(b),
            (IndexValue::Numeric(a), IndexValue::Numeric(b)) => a.partial_cmp(b),
            _ => None,
        }
    }
}

/// A length along a sequence index: nanoseconds for time indices, plain
/// units for numeric ones.
///
/// Renders in the compact form used by feature column names and configs:
/// time deltas use the largest of `D h m s ms us ns` that divides them
/// exactly (`30s`, `2500ms`), numeric deltas use the shortest decimal that
/// round-trips (`0.5`, `5`).
#[derive(Debug, Clone, Copy)]
pub enum Delta {
    Time(i64),
    Numeric(f64),
}

const NS_PER_US: i64 = 1_000;
const NS_PER_MS: i64 = 1_000_000;
const NS_PER_S: i64 = 1_000_000_000;
const NS_PER_M: i64 = 60 * NS_PER_S;
const NS_PER_H: i64 = 60 * NS_PER_M;
const NS_PER_D: i64 = 24 * NS_PER_H;

const FORMAT_UNITS: [(&str, i64); 7] = [
    ("D", NS_PER_D),
    ("h", NS_PER_H),
    ("m", NS_PER_M),
    ("s", NS_PER_S),
    ("ms", NS_PER_MS),
    ("us", NS_PER_US),
    ("ns", 1),
];

// Longest suffixes first so `ms` is not read as `m` + `s`.
const PARSE_UNITS: [(&str, i64); 10] = [
    ("min", NS_PER_M),
    ("ms", NS_PER_MS),
    ("us", NS_PER_US),
    ("µs", NS_PER_US),
    ("ns", 1),
    ("D", NS_PER_D),
    ("d", NS_PER_D),
    ("h", NS_PER_H),
    ("m", NS_PER_M),
    ("s", NS_PER_S),
];

impl Delta {
    pub fn seconds(s: i64) -> Delta {
        Delta::Time(s * NS_PER_S)
    }

    pub fn millis(ms: i64) -> Delta {
        Delta::Time(ms * NS_PER_MS)
    }

    pub fn kind(self) -> IndexKind {
        match self {
            Delta::Time(_) => IndexKind::TimeNs,
            Delta::Numeric(_) => IndexKind::Numeric,
        }
    }

    pub fn is_positive(self) -> bool {
        match self {
            Delta::Time(d) => d > 0,
            Delta::Numeric(d) => d > 0.0 && d.is_finite(),
        }
    }

    pub fn is_zero(self) -> bool {
        match self {
            Delta::Time(d) => d == 0,
            Delta::Numeric(d) => d == 0.0,
        }
    }

    /// The delta as a float in index units (seconds for time deltas).
    pub fn as_f64(self) -> f64 {
        match self {
            Delta::Time(d) => d as f64 / NS_PER_S as f64,
            Delta::Numeric(d) => d,
        }
    }

    pub fn zero(kind: IndexKind) -> Delta {
        match kind {
            IndexKind::TimeNs => Delta::Time(0),
            IndexKind::Numeric => Delta::Numeric(0.0),
        }
    }
}

impl PartialEq for Delta {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Delta::Time(a), Delta::Time(b)) => a == b,
            (Delta::Numeric(a), Delta::Numeric(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        }
    }
}

impl Eq for Delta {}

impl Hash for Delta {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Delta::Time(d) => {
                0u8.hash(state);
                d.hash(state);
            }
            Delta::Numeric(d) => {
                1u8.hash(state);
                d.to_bits().hash(state);
            }
        }
    }
}

impl PartialOrd for Delta {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Delta::Time(a), Delta::Time(b)) => a.partial_cmp(b),
            (Delta::Numeric(a), Delta::Numeric(b)) => a.partial_cmp(b),
            _ => None,
        }
    }
}

impl fmt::Display for Delta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Delta::Numeric(x) => write!(f, "{x}"),
            Delta::Time(0) => f.write_str("0ns"),
            Delta::Time(ns) => {
                if ns < 0 {
                    f.write_str("-")?;
                }
                let abs = ns.unsigned_abs();
                let (unit, size) = FORMAT_UNITS
                    .iter()
                    .find(|(_, size)| abs % (*size as u64) == 0)
                    .copied()
                    .unwrap_or(("ns", 1));
                write!(f, "{}{unit}", abs / size as u64)
            }
        }
    }
}

impl FromStr for Delta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Delta> {
        let bad = || Error::BadDelta(s.to_string());
        let text = s.trim();
        for (suffix, unit) in PARSE_UNITS {
            if let Some(number) = text.strip_suffix(suffix) {
                return parse_scaled(number, unit).map(Delta::Time).ok_or_else(bad);
            }
        }
        match text.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(Delta::Numeric(x)),
            _ => Err(bad()),
        }
    }
}

/// Parses an unsigned decimal and multiplies it by `unit` without going
/// through floating point. Returns `None` when the result is not a whole
/// number of nanoseconds.
fn parse_scaled(number: &str, unit: i64) -> Option<i64> {
    let (whole, frac) = match number.split_once('.') {
        Some((w, f)) => (w, f),
        None => (number, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let whole: i64 = if whole.is_empty() { 0 } else { whole.parse().ok()? };
    let mut total = whole.checked_mul(unit)?;
    let frac = frac.trim_end_matches('0');
    if !frac.is_empty() {
        let digits: i64 = frac.parse().ok()?;
        let scale = 10i64.checked_pow(frac.len() as u32)?;
        let scaled = digits.checked_mul(unit)?;
        if scaled % scale != 0 {
            return None;
        }
        total = total.checked_add(scaled / scale)?;
    }
    Some(total)
}

/// Owned index storage. Cloning shares the underlying buffer.
#[derive(Debug, Clone)]
pub enum Index {
    TimeNs(Arc<Vec<i64>>),
    Numeric(Arc<Vec<f64>>),
}

impl Index {
    pub fn kind(&self) -> IndexKind {
        match self {
            Index::TimeNs(_) => IndexKind::TimeNs,
            Index::Numeric(_) => IndexKind::Numeric,
        }
    }

    pub fn len(&self) -> usize {
        self.as_slice().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_slice(&self) -> IndexSlice<'_> {
        match self {
            Index::TimeNs(v) => IndexSlice::TimeNs(v),
            Index::Numeric(v) => IndexSlice::Numeric(v),
        }
    }

    pub(crate) fn byte_len(&self) -> usize {
        match self {
            Index::TimeNs(v) => v.len() * 8,
            Index::Numeric(v) => v.len() * 8,
        }
    }

    pub(crate) fn storage_ptr(&self) -> *const u8 {
        match self {
            Index::TimeNs(v) => v.as_ptr() as *const u8,
            Index::Numeric(v) => v.as_ptr() as *const u8,
        }
    }

    pub fn from_values(values: &[IndexValue]) -> Result<Index> {
        let Some(first) = values.first() else {
            return Err(Error::InvalidRange);
        };
        match first.kind() {
            IndexKind::TimeNs => values
                .iter()
                .map(|v| match v {
                    IndexValue::Time(t) => Ok(*t),
                    other => Err(Error::KindMismatch {
                        expected: IndexKind::TimeNs,
                        found: other.kind(),
                    }),
                })
                .collect::<Result<Vec<_>>>()
                .map(Index::from),
            IndexKind::Numeric => values
                .iter()
                .map(|v| match v {
                    IndexValue::Numeric(x) => Ok(*x),
                    other => Err(Error::KindMismatch {
                        expected: IndexKind::Numeric,
                        found: other.kind(),
                    }),
                })
                .collect::<Result<Vec<_>>>()
                .map(Index::from),
        }
    }
}

impl From<Vec<i64>> for Index {
    fn from(v: Vec<i64>) -> Self {
        Index::TimeNs(Arc::new(v))
    }
}

impl From<Vec<f64>> for Index {
    fn from(v: Vec<f64>) -> Self {
        Index::Numeric(Arc::new(v))
    }
}

/// Borrowed index positions.
#[derive(Debug, Clone, Copy)]
pub enum IndexSlice<'a> {
    TimeNs(&'a [i64]),
    Numeric(&'a [f64]),
}

impl<'a> IndexSlice<'a> {
    pub fn kind(&self) -> IndexKind {
        match self {
            IndexSlice::TimeNs(_) => IndexKind::TimeNs,
            IndexSlice::Numeric(_) => IndexKind::Numeric,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            IndexSlice::TimeNs(v) => v.len(),
            IndexSlice::Numeric(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> Option<IndexValue> {
        match self {
            IndexSlice::TimeNs(v) => v.get(i).map(|&t| IndexValue::Time(t)),
            IndexSlice::Numeric(v) => v.get(i).map(|&x| IndexValue::Numeric(x)),
        }
    }

    pub fn first(&self) -> Option<IndexValue> {
        self.get(0)
    }

    pub fn last(&self) -> Option<IndexValue> {
        self.len().checked_sub(1).and_then(|i| self.get(i))
    }

    /// Number of leading positions whose index is `< bound` (or `<= bound`
    /// when `inclusive`). The index must be sorted.
    pub fn lower_bound(&self, bound: IndexValue, inclusive: bool) -> Result<usize> {
        match (self, bound) {
            (IndexSlice::TimeNs(v), IndexValue::Time(b)) => Ok(if inclusive {
                v.partition_point(|&x| x <= b)
            } else {
                v.partition_point(|&x| x < b)
            }),
            (IndexSlice::Numeric(v), IndexValue::Numeric(b)) => Ok(if inclusive {
                v.partition_point(|&x| x <= b)
            } else {
                v.partition_point(|&x| x < b)
            }),
            _ => Err(Error::KindMismatch {
                expected: self.kind(),
                found: bound.kind(),
            }),
        }
    }

    /// Index values as floats (seconds for time indices).
    pub fn seconds(&self, i: usize) -> f64 {
        match self {
            IndexSlice::TimeNs(v) => v[i] as f64 / NS_PER_S as f64,
            IndexSlice::Numeric(v) => v[i],
        }
    }

    pub fn to_owned(&self) -> Index {
        match self {
            IndexSlice::TimeNs(v) => Index::from(v.to_vec()),
            IndexSlice::Numeric(v) => Index::from(v.to_vec()),
        }
    }
}
