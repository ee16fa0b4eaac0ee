use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::index::Delta;
use crate::series::validate_name;

use super::naming::{format_output_name, parse_output_name};
use super::wrapper::FuncWrapper;

/// Features sharing a key share one segment grid at extraction time.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupKey {
    pub series: Vec<String>,
    pub window: Delta,
    pub stride: Delta,
}

impl GroupKey {
    /// Input names joined the way they appear in column names.
    pub fn series_label(&self) -> String {
        self.series.join("|")
    }

    pub fn column_name(&self, output: &str) -> Result<String> {
        format_output_name(&self.series, output, self.window, self.stride)
    }
}

/// One function applied to one tuple of series over one window/stride.
#[derive(Debug, Clone)]
pub struct FeatureDescriptor {
    key: GroupKey,
    function: FuncWrapper,
}

impl FeatureDescriptor {
    pub fn new<S: AsRef<str>>(
        series: &[S],
        function: FuncWrapper,
        window: Delta,
        stride: Delta,
    ) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidDescriptor(msg));
        if series.is_empty() {
            return invalid(format!("`{}` has no input series", function.base_name()));
        }
        let series: Vec<String> = series.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, name) in series.iter().enumerate() {
            validate_name(name)?;
            if series[..i].contains(name) {
                return invalid(format!("series `{name}` listed twice"));
            }
        }
        if window.kind() != stride.kind() {
            return invalid(format!("window {window} and stride {stride} differ in kind"));
        }
        if !window.is_positive() {
            return invalid(format!("window {window} is not positive"));
        }
        if !stride.is_positive() {
            return invalid(format!("stride {stride} is not positive"));
        }
        Ok(FeatureDescriptor {
            key: GroupKey {
                series,
                window,
                stride,
            },
            function,
        })
    }

    pub fn key(&self) -> &GroupKey {
        &self.key
    }

    pub fn function(&self) -> &FuncWrapper {
        &self.function
    }

    pub fn output_columns(&self) -> Result<Vec<String>> {
        self.function
            .output_names()
            .iter()
            .map(|o| self.key.column_name(o))
            .collect()
    }
}

/// Registry of features to compute, grouped by (series, window, stride) in
/// registration order.
#[derive(Debug, Clone, Default)]
pub struct FeatureCollection {
    groups: IndexMap<GroupKey, Vec<FuncWrapper>>,
}

impl FeatureCollection {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_descriptors(descriptors: impl IntoIterator<Item = FeatureDescriptor>) -> Result<Self> {
        let mut collection = Self::new();
        for d in descriptors {
            collection.add(d)?;
        }
        Ok(collection)
    }

    /// Registers a descriptor. Fails when any of its output columns is
    /// already produced by the collection.
    pub fn add(&mut self, descriptor: FeatureDescriptor) -> Result<()> {
        let FeatureDescriptor { key, function } = descriptor;
        let funcs = self.groups.entry(key.clone()).or_default();
        for output in function.output_names() {
            if funcs.iter().any(|f| f.output_names().contains(output)) {
                return Err(Error::DuplicateFeature {
                    column: key.column_name(output)?,
                });
            }
        }
        funcs.push(function);
        Ok(())
    }

    pub fn extend(&mut self, descriptors: impl IntoIterator<Item = FeatureDescriptor>) -> Result<()> {
        for d in descriptors {
            self.add(d)?;
        }
        Ok(())
    }

    pub fn groups(&self) -> impl Iterator<Item = (&GroupKey, &[FuncWrapper])> {
        self.groups.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    /// Number of registered descriptors.
    pub fn len(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn descriptors(&self) -> Vec<FeatureDescriptor> {
        self.groups
            .iter()
            .flat_map(|(key, funcs)| {
                funcs.iter().map(|f| FeatureDescriptor {
                    key: key.clone(),
                    function: f.clone(),
                })
            })
            .collect()
    }

    /// Every series name any feature reads.
    pub fn required_series(&self) -> BTreeSet<&str> {
        self.groups
            .keys()
            .flat_map(|k| k.series.iter().map(String::as_str))
            .collect()
    }

    /// Column names extraction will produce, in matrix order.
    pub fn output_columns(&self) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for (key, funcs) in &self.groups {
            for f in funcs {
                for o in f.output_names() {
                    out.push(key.column_name(o)?);
                }
            }
        }
        Ok(out)
    }

    /// The sub-collection producing `columns`. A multi-output function is
    /// kept whole when any one of its outputs is requested.
    pub fn reduce<S: AsRef<str>>(&self, columns: &[S]) -> Result<FeatureCollection> {
        let mut keep: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for column in columns {
            let column = column.as_ref();
            let parsed = parse_output_name(column)?;
            let key = GroupKey {
                series: parsed.series,
                window: parsed.window,
                stride: parsed.stride,
            };
            let found = self.groups.get_full(&key).and_then(|(g, _, funcs)| {
                funcs
                    .iter()
                    .position(|f| f.output_names().contains(&parsed.output))
                    .map(|i| (g, i))
            });
            let (g, i) = found.ok_or_else(|| Error::UnknownColumn(column.to_string()))?;
            keep.entry(g).or_default().insert(i);
        }
        let groups = keep
            .into_iter()
            .map(|(g, funcs)| {
                let (key, all) = self.groups.get_index(g).expect("group position from lookup");
                (key.clone(), funcs.into_iter().map(|i| all[i].clone()).collect())
            })
            .collect();
        Ok(FeatureCollection { groups })
    }
}

impl PartialEq for FeatureCollection {
    fn eq(&self, other: &Self) -> bool {
        self.groups.len() == other.groups.len()
            && self.groups.iter().zip(&other.groups).all(|((ka, fa), (kb, fb))| {
                ka == kb
                    && fa.len() == fb.len()
                    && fa.iter().zip(fb).all(|(a, b)| a.signature() == b.signature())
            })
    }
}

/// Cartesian product of functions, series entries, windows and strides.
/// Descriptors come out ordered series, window, stride, function so that
/// each group's functions stay in the order given.
pub fn expand_multiple<S: AsRef<str>>(
    functions: &[FuncWrapper],
    series: &[Vec<S>],
    windows: &[Delta],
    strides: &[Delta],
) -> Result<Vec<FeatureDescriptor>> {
    if functions.is_empty() {
        return Err(Error::EmptyAxis("functions"));
    }
    if series.is_empty() {
        return Err(Error::EmptyAxis("series"));
    }
    if windows.is_empty() {
        return Err(Error::EmptyAxis("windows"));
    }
    if strides.is_empty() {
        return Err(Error::EmptyAxis("strides"));
    }
    let mut out = Vec::with_capacity(functions.len() * series.len() * windows.len() * strides.len());
    for entry in series {
        for &w in windows {
            for &s in strides {
                for f in functions {
                    out.push(FeatureDescriptor::new(entry, f.clone(), w, s)?);
                }
            }
        }
    }
    Ok(out)
}
