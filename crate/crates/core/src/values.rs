//! Typed value columns and the scalars feature functions return.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueTag {
    F64,
    F32,
    I64,
    Bool,
    Categorical,
}

impl ValueTag {
    pub fn is_float(self) -> bool {
        matches!(self, ValueTag::F64 | ValueTag::F32)
    }
}

impl fmt::Display for ValueTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ValueTag::F64 => "f64",
            ValueTag::F32 => "f32",
            ValueTag::I64 => "i64",
            ValueTag::Bool => "bool",
            ValueTag::Categorical => "categorical",
        };
        f.write_str(s)
    }
}

/// Dictionary-encoded strings.
#[derive(Debug, Clone)]
pub struct Categorical {
    codes: Arc<Vec<u32>>,
    labels: Arc<Vec<String>>,
}

impl Categorical {
    pub fn new(codes: Vec<u32>, labels: Vec<String>) -> Result<Self> {
        let mut seen = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if seen.insert(label.as_str(), i).is_some() {
                return Err(Error::BadCategorical(format!("duplicate label `{label}`")));
            }
        }
        if let Some(code) = codes.iter().find(|&&c| c as usize >= labels.len()) {
            return Err(Error::BadCategorical(format!(
                "code {code} out of range for {} labels",
                labels.len()
            )));
        }
        Ok(Categorical {
            codes: Arc::new(codes),
            labels: Arc::new(labels),
        })
    }

    /// Encodes labels in first-seen order.
    pub fn encode<'s>(values: impl IntoIterator<Item = &'s str>) -> Self {
        let mut lookup: HashMap<&str, u32> = HashMap::new();
        let mut labels = Vec::new();
        let codes = values
            .into_iter()
            .map(|v| {
                *lookup.entry(v).or_insert_with(|| {
                    labels.push(v.to_string());
                    (labels.len() - 1) as u32
                })
            })
            .collect();
        Categorical {
            codes: Arc::new(codes),
            labels: Arc::new(labels),
        }
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Contiguous typed storage for one series. Cloning shares the buffer.
#[derive(Debug, Clone)]
pub enum ValueColumn {
    F64(Arc<Vec<f64>>),
    F32(Arc<Vec<f32>>),
    I64(Arc<Vec<i64>>),
    Bool(Arc<Vec<bool>>),
    Categorical(Categorical),
}

impl ValueColumn {
    pub fn tag(&self) -> ValueTag {
        match self {
            ValueColumn::F64(_) => ValueTag::F64,
            ValueColumn::F32(_) => ValueTag::F32,
            ValueColumn::I64(_) => ValueTag::I64,
            ValueColumn::Bool(_) => ValueTag::Bool,
            ValueColumn::Categorical(_) => ValueTag::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        self.as_slice().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_slice(&self) -> ValueSlice<'_> {
        match self {
            ValueColumn::F64(v) => ValueSlice::F64(v),
            ValueColumn::F32(v) => ValueSlice::F32(v),
            ValueColumn::I64(v) => ValueSlice::I64(v),
            ValueColumn::Bool(v) => ValueSlice::Bool(v),
            ValueColumn::Categorical(c) => ValueSlice::Categorical {
                codes: &c.codes,
                labels: &c.labels,
            },
        }
    }

    pub(crate) fn byte_len(&self) -> usize {
        match self {
            ValueColumn::F64(v) => v.len() * 8,
            ValueColumn::F32(v) => v.len() * 4,
            ValueColumn::I64(v) => v.len() * 8,
            ValueColumn::Bool(v) => v.len(),
            ValueColumn::Categorical(c) => {
                c.codes.len() * 4 + c.labels.iter().map(|l| l.len()).sum::<usize>()
            }
        }
    }

    pub(crate) fn storage_ptr(&self) -> *const u8 {
        match self {
            ValueColumn::F64(v) => v.as_ptr() as *const u8,
            ValueColumn::F32(v) => v.as_ptr() as *const u8,
            ValueColumn::I64(v) => v.as_ptr() as *const u8,
            ValueColumn::Bool(v) => v.as_ptr() as *const u8,
            ValueColumn::Categorical(c) => c.codes.as_ptr() as *const u8,
        }
    }
}

impl From<Vec<f64>> for ValueColumn {
    fn from(v: Vec<f64>) -> Self {
        ValueColumn::F64(Arc::new(v))
    }
}

impl From<Vec<f32>> for ValueColumn {
    fn from(v: Vec<f32>) -> Self {
        ValueColumn::F32(Arc::new(v))
    }
}

impl From<Vec<i64>> for ValueColumn {
    fn from(v: Vec<i64>) -> Self {
        ValueColumn::I64(Arc::new(v))
    }
}

impl From<Vec<bool>> for ValueColumn {
    fn from(v: Vec<bool>) -> Self {
        ValueColumn::Bool(Arc::new(v))
    }
}

impl From<Categorical> for ValueColumn {
    fn from(c: Categorical) -> Self {
        ValueColumn::Categorical(c)
    }
}

/// Borrowed window onto a [`ValueColumn`].
#[derive(Debug, Clone, Copy)]
pub enum ValueSlice<'a> {
    F64(&'a [f64]),
    F32(&'a [f32]),
    I64(&'a [i64]),
    Bool(&'a [bool]),
    Categorical {
        codes: &'a [u32],
        labels: &'a [String],
    },
}

impl<'a> ValueSlice<'a> {
    pub fn tag(&self) -> ValueTag {
        match self {
            ValueSlice::F64(_) => ValueTag::F64,
            ValueSlice::F32(_) => ValueTag::F32,
            ValueSlice::I64(_) => ValueTag::I64,
            ValueSlice::Bool(_) => ValueTag::Bool,
            ValueSlice::Categorical { .. } => ValueTag::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ValueSlice::F64(v) => v.len(),
            ValueSlice::F32(v) => v.len(),
            ValueSlice::I64(v) => v.len(),
            ValueSlice::Bool(v) => v.len(),
            ValueSlice::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn range(&self, lo: usize, hi: usize) -> ValueSlice<'a> {
        match *self {
            ValueSlice::F64(v) => ValueSlice::F64(&v[lo..hi]),
            ValueSlice::F32(v) => ValueSlice::F32(&v[lo..hi]),
            ValueSlice::I64(v) => ValueSlice::I64(&v[lo..hi]),
            ValueSlice::Bool(v) => ValueSlice::Bool(&v[lo..hi]),
            ValueSlice::Categorical { codes, labels } => ValueSlice::Categorical {
                codes: &codes[lo..hi],
                labels,
            },
        }
    }

    /// Element `i` as a scalar of the slice's own type.
    pub fn scalar(&self, i: usize) -> Scalar {
        match self {
            ValueSlice::F64(v) => Scalar::F64(v[i]),
            ValueSlice::F32(v) => Scalar::F32(v[i]),
            ValueSlice::I64(v) => Scalar::I64(v[i]),
            ValueSlice::Bool(v) => Scalar::Bool(v[i]),
            ValueSlice::Categorical { codes, labels } => {
                Scalar::Categorical(labels[codes[i] as usize].clone())
            }
        }
    }

    /// Element `i` widened to f64; `None` for categorical data.
    pub fn get_f64(&self, i: usize) -> Option<f64> {
        match self {
            ValueSlice::F64(v) => Some(v[i]),
            ValueSlice::F32(v) => Some(v[i] as f64),
            ValueSlice::I64(v) => Some(v[i] as f64),
            ValueSlice::Bool(v) => Some(if v[i] { 1.0 } else { 0.0 }),
            ValueSlice::Categorical { .. } => None,
        }
    }

    /// Copies into an owned column, re-encoding categorical labels.
    pub fn to_column(&self) -> ValueColumn {
        match self {
            ValueSlice::F64(v) => ValueColumn::from(v.to_vec()),
            ValueSlice::F32(v) => ValueColumn::from(v.to_vec()),
            ValueSlice::I64(v) => ValueColumn::from(v.to_vec()),
            ValueSlice::Bool(v) => ValueColumn::from(v.to_vec()),
            ValueSlice::Categorical { codes, labels } => ValueColumn::Categorical(
                Categorical::encode(codes.iter().map(|&c| labels[c as usize].as_str())),
            ),
        }
    }
}

/// One output cell of a feature function.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    F64(f64),
    F32(f32),
    I64(i64),
    Bool(bool),
    Categorical(String),
    Null,
}

impl Scalar {
    pub fn tag(&self) -> Option<ValueTag> {
        match self {
            Scalar::F64(_) => Some(ValueTag::F64),
            Scalar::F32(_) => Some(ValueTag::F32),
            Scalar::I64(_) => Some(ValueTag::I64),
            Scalar::Bool(_) => Some(ValueTag::Bool),
            Scalar::Categorical(_) => Some(ValueTag::Categorical),
            Scalar::Null => None,
        }
    }

    /// Equality that treats identical NaN bit patterns as equal.
    pub fn bitwise_eq(&self, other: &Scalar) -> bool {
        match (self, other) {
            (Scalar::F64(a), Scalar::F64(b)) => a.to_bits() == b.to_bits(),
            (Scalar::F32(a), Scalar::F32(b)) => a.to_bits() == b.to_bits(),
            _ => self == other,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Scalar::F64(x) => Some(*x),
            Scalar::F32(x) => Some(*x as f64),
            Scalar::I64(x) => Some(*x as f64),
            Scalar::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
            _ => None,
        }
    }
}

impl From<f64> for Scalar {
    fn from(x: f64) -> Self {
        Scalar::F64(x)
    }
}

impl From<i64> for Scalar {
    fn from(x: i64) -> Self {
        Scalar::I64(x)
    }
}

/// Numeric element types that widen losslessly enough to f64 for
/// statistics.
pub trait AsF64: Copy {
    fn as_f64(self) -> f64;
}

impl AsF64 for f64 {
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

impl AsF64 for f32 {
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl AsF64 for i64 {
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl AsF64 for bool {
    #[inline]
    fn as_f64(self) -> f64 {
        if self {
            1.0
        } else {
            0.0
        }
    }
}
