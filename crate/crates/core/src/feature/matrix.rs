use indexmap::IndexMap;

use crate::error::Result;
use crate::index::{Index, IndexKind};
use crate::values::{Scalar, ValueTag};

/// One feature column. Missing cells are NaN for float columns and `None`
/// otherwise.
#[derive(Debug, Clone)]
pub enum Column {
    F64(Vec<f64>),
    F32(Vec<f32>),
    I64(Vec<Option<i64>>),
    Bool(Vec<Option<bool>>),
    Categorical(Vec<Option<String>>),
}

impl Column {
    pub(crate) fn missing(tag: ValueTag, len: usize) -> Column {
        match tag {
            ValueTag::F64 => Column::F64(vec![f64::NAN; len]),
            ValueTag::F32 => Column::F32(vec![f32::NAN; len]),
            ValueTag::I64 => Column::I64(vec![None; len]),
            ValueTag::Bool => Column::Bool(vec![None; len]),
            ValueTag::Categorical => Column::Categorical(vec![None; len]),
        }
    }

    pub(crate) fn with_capacity(tag: ValueTag, len: usize) -> Column {
        match tag {
            ValueTag::F64 => Column::F64(Vec::with_capacity(len)),
            ValueTag::F32 => Column::F32(Vec::with_capacity(len)),
            ValueTag::I64 => Column::I64(Vec::with_capacity(len)),
            ValueTag::Bool => Column::Bool(Vec::with_capacity(len)),
            ValueTag::Categorical => Column::Categorical(Vec::with_capacity(len)),
        }
    }

    /// Appends a function output, widening numeric scalars into float
    /// columns. Returns a description of the mismatch otherwise.
    pub(crate) fn push(&mut self, value: Scalar) -> Result<(), String> {
        match (self, value) {
            (Column::F64(c), v) if !matches!(v, Scalar::Categorical(_)) => {
                c.push(v.as_f64().unwrap_or(f64::NAN))
            }
            (Column::F32(c), Scalar::F32(x)) => c.push(x),
            (Column::F32(c), v) if !matches!(v, Scalar::Categorical(_)) => {
                c.push(v.as_f64().map_or(f32::NAN, |x| x as f32))
            }
            (Column::I64(c), Scalar::I64(x)) => c.push(Some(x)),
            (Column::I64(c), Scalar::Null) => c.push(None),
            (Column::Bool(c), Scalar::Bool(x)) => c.push(Some(x)),
            (Column::Bool(c), Scalar::Null) => c.push(None),
            (Column::Categorical(c), Scalar::Categorical(x)) => c.push(Some(x)),
            (Column::Categorical(c), Scalar::Null) => c.push(None),
            (col, v) => {
                let found = v.tag().map_or("null".to_string(), |t| t.to_string());
                return Err(format!("returned a {found} value for a {} output", col.tag()));
            }
        }
        Ok(())
    }

    pub fn tag(&self) -> ValueTag {
        match self {
            Column::F64(_) => ValueTag::F64,
            Column::F32(_) => ValueTag::F32,
            Column::I64(_) => ValueTag::I64,
            Column::Bool(_) => ValueTag::Bool,
            Column::Categorical(_) => ValueTag::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Column::F64(c) => c.len(),
            Column::F32(c) => c.len(),
            Column::I64(c) => c.len(),
            Column::Bool(c) => c.len(),
            Column::Categorical(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell `i`; missing non-float cells come back as [`Scalar::Null`].
    pub fn get(&self, i: usize) -> Scalar {
        match self {
            Column::F64(c) => Scalar::F64(c[i]),
            Column::F32(c) => Scalar::F32(c[i]),
            Column::I64(c) => c[i].map_or(Scalar::Null, Scalar::I64),
            Column::Bool(c) => c[i].map_or(Scalar::Null, Scalar::Bool),
            Column::Categorical(c) => c[i].clone().map_or(Scalar::Null, Scalar::Categorical),
        }
    }

    pub fn as_f64(&self) -> Option<&[f64]> {
        match self {
            Column::F64(c) => Some(c),
            _ => None,
        }
    }

    /// Copies cells from `src` into the given rows of `self`.
    pub(crate) fn scatter(&mut self, rows: &[usize], src: Column) {
        fn go<T>(dst: &mut [T], rows: &[usize], src: Vec<T>) {
            for (&r, v) in rows.iter().zip(src) {
                dst[r] = v;
            }
        }
        match (self, src) {
            (Column::F64(d), Column::F64(s)) => go(d, rows, s),
            (Column::F32(d), Column::F32(s)) => go(d, rows, s),
            (Column::I64(d), Column::I64(s)) => go(d, rows, s),
            (Column::Bool(d), Column::Bool(s)) => go(d, rows, s),
            (Column::Categorical(d), Column::Categorical(s)) => go(d, rows, s),
            _ => unreachable!("scatter between columns of different types"),
        }
    }

    pub(crate) fn take(&self, rows: &[usize]) -> Column {
        fn go<T: Clone>(c: &[T], rows: &[usize]) -> Vec<T> {
            rows.iter().map(|&r| c[r].clone()).collect()
        }
        match self {
            Column::F64(c) => Column::F64(go(c, rows)),
            Column::F32(c) => Column::F32(go(c, rows)),
            Column::I64(c) => Column::I64(go(c, rows)),
            Column::Bool(c) => Column::Bool(go(c, rows)),
            Column::Categorical(c) => Column::Categorical(go(c, rows)),
        }
    }

    /// Equality with floats compared by bit pattern, so NaN cells match.
    pub fn bitwise_eq(&self, other: &Column) -> bool {
        match (self, other) {
            (Column::F64(a), Column::F64(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (Column::F32(a), Column::F32(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (Column::I64(a), Column::I64(b)) => a == b,
            (Column::Bool(a), Column::Bool(b)) => a == b,
            (Column::Categorical(a), Column::Categorical(b)) => a == b,
            _ => false,
        }
    }
}

/// Extraction output: one row per distinct window label across all groups,
/// one column per feature output.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    index: Index,
    columns: IndexMap<String, Column>,
    // Group ordinal of each column, and the rows each group labelled.
    column_groups: Vec<usize>,
    group_rows: Vec<Vec<usize>>,
}

impl FeatureMatrix {
    pub(crate) fn new(
        index: Index,
        columns: IndexMap<String, Column>,
        column_groups: Vec<usize>,
        group_rows: Vec<Vec<usize>>,
    ) -> Self {
        FeatureMatrix {
            index,
            columns,
            column_groups,
            group_rows,
        }
    }

    pub fn empty(kind: IndexKind) -> Self {
        let index = match kind {
            IndexKind::TimeNs => Index::from(Vec::<i64>::new()),
            IndexKind::Numeric => Index::from(Vec::<f64>::new()),
        };
        FeatureMatrix::new(index, IndexMap::new(), Vec::new(), Vec::new())
    }

    pub fn index(&self) -> &Index {
        &self.index
    }

    pub fn n_rows(&self) -> usize {
        self.index.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.get(name)
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &Column)> {
        self.columns.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// The matrix restricted to `names`, keeping only rows labelled by the
    /// groups those columns come from. This is what extracting just those
    /// columns would produce.
    pub fn project<S: AsRef<str>>(&self, names: &[S]) -> Option<FeatureMatrix> {
        let mut picked: Vec<usize> = names
            .iter()
            .map(|n| self.columns.get_index_of(n.as_ref()))
            .collect::<Option<_>>()?;
        picked.sort_unstable();
        picked.dedup();
        let mut groups: Vec<usize> = picked.iter().map(|&c| self.column_groups[c]).collect();
        groups.sort_unstable();
        groups.dedup();
        let mut rows: Vec<usize> = groups
            .iter()
            .flat_map(|&g| self.group_rows[g].iter().copied())
            .collect();
        rows.sort_unstable();
        rows.dedup();

        let mut new_pos = vec![usize::MAX; self.n_rows()];
        for (i, &r) in rows.iter().enumerate() {
            new_pos[r] = i;
        }
        let index = take_index(&self.index, &rows);
        let group_rows = groups
            .iter()
            .map(|&g| self.group_rows[g].iter().map(|&r| new_pos[r]).collect())
            .collect();
        let mut columns = IndexMap::with_capacity(picked.len());
        let mut column_groups = Vec::with_capacity(picked.len());
        for &c in &picked {
            let (name, col) = self.columns.get_index(c).expect("position from lookup");
            columns.insert(name.clone(), col.take(&rows));
            column_groups.push(groups.binary_search(&self.column_groups[c]).expect("group listed"));
        }
        Some(FeatureMatrix::new(index, columns, column_groups, group_rows))
    }

    /// Same index and same columns in the same order, floats compared by
    /// bit pattern.
    pub fn bitwise_eq(&self, other: &FeatureMatrix) -> bool {
        let same_index = match (&self.index, &other.index) {
            (Index::TimeNs(a), Index::TimeNs(b)) => a == b,
            (Index::Numeric(a), Index::Numeric(b)) => {
                a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => false,
        };
        same_index
            && self.columns.len() == other.columns.len()
            && self
                .columns
                .iter()
                .zip(&other.columns)
                .all(|((na, ca), (nb, cb))| na == nb && ca.bitwise_eq(cb))
    }
}

fn take_index(index: &Index, rows: &[usize]) -> Index {
    match index {
        Index::TimeNs(v) => Index::from(rows.iter().map(|&r| v[r]).collect::<Vec<_>>()),
        Index::Numeric(v) => Index::from(rows.iter().map(|&r| v[r]).collect::<Vec<_>>()),
    }
}
